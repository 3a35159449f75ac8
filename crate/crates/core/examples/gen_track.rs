//! Generates a track and prints its summary, optionally saving the text form.
//!
//! cargo run --example gen_track -- [seed] [path]

use carracing::environment::{generate_track, Track, TrackConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);
    let track = generate_track(&TrackConfig::default().with_seed(seed))?;

    let (min_k, max_k) = track
        .tiles()
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), t| (lo.min(t.curvature), hi.max(t.curvature)));
    println!("seed        {}", track.seed());
    println!("tiles       {}", track.tile_count());
    println!("length      {:.1} m", track.total_length());
    println!("tile length {:.2} m", track.total_length() / track.tile_count() as f64);
    println!("curvature   {min_k:.4} .. {max_k:.4} 1/m");

    let text = track.to_text();
    assert_eq!(Track::from_text(&text)?, track);
    if let Some(path) = args.next() {
        std::fs::write(&path, text)?;
        println!("written to {path}");
    }
    Ok(())
}
