use lightnorm::toytrain::{ablation_configs, run_toy};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: Vec<u64> = args.get(1).map(|s| s.split(',').map(|v| v.parse().unwrap()).collect()).unwrap_or_else(|| (0..5).collect());
    let epochs: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(50);
    for (name, cfg) in ablation_configs() {
        let accs: Vec<f64> = seeds.iter().map(|&s| run_toy(&cfg, "gaussian-clusters", 4000, epochs, s).unwrap().tail_accuracy(5)).collect();
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        println!("{name:14} mean {:.4}  {:?}", mean, accs.iter().map(|a| (a * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    }
}
