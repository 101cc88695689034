use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use lago::problems::{build_problem, gradient_check, registry};
use lago_bench::{parse_seeds, run_campaign, run_conditioning_ablation, run_gamma_ablation, CampaignConfig};

#[derive(Parser)]
#[command(name = "lago-bench", version, about = "Benchmark campaigns for the lago optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm over several seeds and write traces and summaries.
    Run(Campaign),
    /// Sweep γ on a shared set of seeds (default: Levy, γ = 0.5,1,2,5).
    AblateGamma(Campaign),
    /// Condition numbers around the first filter activation, ν against 0.
    AblateConditioning {
        #[command(flatten)]
        campaign: Campaign,
        /// Seeds with a filter activation to collect before stopping.
        #[arg(long, default_value_t = 10)]
        min_events: usize,
        #[arg(long, default_value_t = 100)]
        max_seeds: usize,
        /// Iterations on each side of the activation.
        #[arg(long, default_value_t = 3)]
        window: usize,
    },
    /// Compare analytic gradients against central differences.
    Gradcheck {
        /// All problems when omitted.
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        mesh_n: Option<usize>,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print problem names and supported dimensions.
    ListProblems,
}

#[derive(Args, Clone)]
struct Campaign {
    /// Flat TOML file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// lago, gradbo or bo.
    #[arg(long)]
    mode: Option<String>,
    /// `N` for 1..=N, `a..b` inclusive, or a comma list.
    #[arg(long)]
    seeds: Option<String>,
    /// Evaluation units per run (default 210·d).
    #[arg(long)]
    budget: Option<usize>,
    /// One value, or a comma list for ablate-gamma.
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// Evaluation units charged per gradient.
    #[arg(long)]
    gradient_cost: Option<usize>,
    /// Mesh cells per side for the PDE problem.
    #[arg(long)]
    mesh_n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seeds run concurrently.
    #[arg(long)]
    workers: Option<usize>,
}

impl Campaign {
    fn resolve(&self, default_problem: &str) -> anyhow::Result<CampaignConfig> {
        let mut cfg = match &self.config {
            Some(path) => CampaignConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
            None => CampaignConfig { problem: default_problem.into(), ..Default::default() },
        };
        if let Some(p) = &self.problem {
            cfg.problem = p.clone();
        }
        if let Some(d) = self.dim {
            cfg.dim = d;
        }
        if let Some(m) = &self.mode {
            cfg.mode = m.to_ascii_lowercase();
        }
        if let Some(s) = &self.seeds {
            cfg.seeds = parse_seeds(s)?;
        }
        if self.budget.is_some() {
            cfg.budget = self.budget;
        }
        if let [g] = self.gamma[..] {
            cfg.gamma = g;
        }
        if let Some(nu) = self.nu {
            cfg.nu = nu;
        }
        if self.gradient_cost.is_some() {
            cfg.gradient_cost = self.gradient_cost;
        }
        if self.mesh_n.is_some() {
            cfg.mesh_n = self.mesh_n;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(c) => {
            if c.gamma.len() > 1 {
                bail!("`run` takes a single --gamma; use `ablate-gamma` for a sweep");
            }
            let cfg = c.resolve("branin")?;
            let result = run_campaign(&cfg)?;
            let s = result.final_spread();
            println!(
                "{} {} d={} seeds={} budget={}: final error median {:e} (q1 {:e}, q3 {:e}) -> {}",
                cfg.problem,
                cfg.mode,
                cfg.dim,
                cfg.seeds.len(),
                result.budget,
                s.median,
                s.q1,
                s.q3,
                cfg.out.display()
            );
        }
        Command::AblateGamma(c) => {
            let cfg = c.resolve("levy")?;
            let gammas = if c.gamma.is_empty() { vec![0.5, 1.0, 2.0, 5.0] } else { c.gamma.clone() };
            for row in run_gamma_ablation(&cfg, &gammas)? {
                println!(
                    "gamma {}: final error median {:e} (q1 {:e}, q3 {:e})",
                    row.gamma, row.final_error.median, row.final_error.q1, row.final_error.q3
                );
            }
        }
        Command::AblateConditioning { campaign, min_events, max_seeds, window } => {
            let cfg = campaign.resolve("branin")?;
            let report = run_conditioning_ablation(&cfg, window, min_events, max_seeds)?;
            println!("{} seeds with an activation, {} without", report.events.len(), report.skipped.len());
            for r in &report.rows {
                println!(
                    "nu {} offset {:+}: median {:.4e} (q1 {:.4e}, q3 {:.4e})",
                    r.nu, r.offset, r.ratio.median, r.ratio.q1, r.ratio.q3
                );
            }
        }
        Command::Gradcheck { problem, dim, mesh_n, points, seed } => {
            let targets: Vec<(String, usize)> = match problem {
                Some(p) => vec![(p, dim.unwrap_or(2))],
                None => registry()
                    .into_iter()
                    .flat_map(|(name, dims)| dims.iter().map(move |d| (name.to_string(), *d)))
                    .collect(),
            };
            for (name, d) in targets {
                let p = build_problem::<f64>(&name, d, mesh_n)?;
                println!("{name} d={d}: max relative gradient error {:e}", gradient_check(&p, points, seed));
            }
        }
        Command::ListProblems => {
            for (name, dims) in registry() {
                let dims: Vec<String> = dims.iter().map(ToString::to_string).collect();
                println!("{name}\td = {}", dims.join(", "));
            }
        }
    }
    Ok(())
}
