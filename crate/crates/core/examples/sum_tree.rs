//! Proportional sampling from a sum tree: empirical frequencies against
//! `priority / total`.
//!
//! cargo run --example sum_tree

use carracing::ddqn::SumTree;
use carracing::seeding;
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let priorities = [1.0, 2.0, 3.0, 0.5, 1.5];
    let mut tree = SumTree::new(8)?;
    for (i, &p) in priorities.iter().enumerate() {
        tree.push(format!("item {i}"), p)?;
    }
    println!("total priority {}", tree.total());

    let draws = 100_000;
    let mut counts = [0usize; 5];
    let mut rng = seeding::stream(1, &[]);
    for _ in 0..draws {
        let (leaf, _, _) = tree.sample(rng.random_range(0.0..tree.total()))?;
        counts[leaf] += 1;
    }
    for (i, &p) in priorities.iter().enumerate() {
        let expected = p / tree.total();
        println!(
            "{:<7} p={p:<4} expected {expected:.4}  observed {:.4}",
            tree.get(i).unwrap(),
            counts[i] as f64 / draws as f64
        );
    }

    tree.update(0, 10.0)?;
    println!("after raising item 0 to 10: total {}, max {}", tree.total(), tree.max_priority());
    Ok(())
}
