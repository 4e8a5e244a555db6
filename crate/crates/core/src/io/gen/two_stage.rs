use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::efg::{GameBuilder, GameTree, Player};
use crate::error::{Error, Result};

fn default_payoff_max() -> f64 {
    2.0
}

/// Two-stage game: a general-sum matrix game followed by one of `num_games`
/// secondary matrix games chosen by chance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoStageSpec {
    pub n: usize,
    #[serde(rename = "M")]
    pub num_games: usize,
    pub m: usize,
    pub kappa: f64,
    pub seed: u64,
    /// Payoff entries are drawn uniformly from `[0, payoff_max]`.
    #[serde(default = "default_payoff_max")]
    pub payoff_max: f64,
}

impl TwoStageSpec {
    pub fn new(n: usize, num_games: usize, m: usize, kappa: f64, seed: u64) -> Self {
        TwoStageSpec {
            n,
            num_games,
            m,
            kappa,
            seed,
            payoff_max: default_payoff_max(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.num_games == 0 || self.m == 0 {
            return Err(Error::InvalidParameter("n, M and m must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::InvalidParameter(format!("kappa {} not in [0, 1]", self.kappa)));
        }
        if self.payoff_max.is_nan() || self.payoff_max <= 0.0 {
            return Err(Error::InvalidParameter("payoff_max must be positive".into()));
        }
        Ok(())
    }
}

/// Leader and follower payoff matrices, indexed `[leader action][follower action]`.
pub type MatrixPair = [Vec<Vec<f64>>; 2];

/// Parameters drawn for one two-stage instance.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoStageDraw {
    pub stage_one: MatrixPair,
    pub secondary: Vec<MatrixPair>,
    /// `transition[a1][j]`: probability of secondary game `j` after leader action `a1`.
    pub transition: Vec<Vec<f64>>,
}

pub fn draw_two_stage(spec: &TwoStageSpec) -> Result<TwoStageDraw> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let hi = spec.payoff_max;
    let matrix = |rng: &mut ChaCha8Rng, rows: usize| -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| (0..rows).map(|_| rng.random_range(0.0..hi)).collect())
            .collect()
    };
    let stage_one = [matrix(&mut rng, spec.n), matrix(&mut rng, spec.n)];
    let secondary: Vec<MatrixPair> = (0..spec.num_games)
        .map(|_| [matrix(&mut rng, spec.m), matrix(&mut rng, spec.m)])
        .collect();
    let q = 1.0 / spec.num_games as f64;
    let transition = (0..spec.n)
        .map(|_| {
            let w: Vec<f64> = (0..spec.num_games).map(|_| rng.random::<f64>()).collect();
            let total: f64 = w.iter().sum();
            let col: Vec<f64> = if total > 0.0 {
                w.iter().map(|x| x / total).collect()
            } else {
                vec![q; spec.num_games]
            };
            col.iter().map(|x| spec.kappa * x + (1.0 - spec.kappa) * q).collect()
        })
        .collect();
    Ok(TwoStageDraw {
        stage_one,
        secondary,
        transition,
    })
}

pub fn two_stage(spec: &TwoStageSpec) -> Result<GameTree> {
    let d = draw_two_stage(spec)?;
    let mut b = GameBuilder::new(format!(
        "twostage-n{}-M{}-m{}-k{}-s{}",
        spec.n, spec.num_games, spec.m, spec.kappa, spec.seed
    ));
    b.metadata("generator", json!({ "family": "twostage", "spec": spec }));
    b.metadata("payoff_distribution", json!(format!("uniform[0,{}]", spec.payoff_max)));
    b.metadata(
        "stage_one",
        json!({ "leader": d.stage_one[0], "follower": d.stage_one[1] }),
    );
    b.metadata("seed", json!(spec.seed));

    let labels = |p: &str, k: usize| (0..k).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let root = b.decision(Player::Leader, "L1", labels("a", spec.n));
    for a1 in 0..spec.n {
        let f = b.decision(Player::Follower, "F1", labels("b", spec.n));
        b.attach(root, f);
        for a2 in 0..spec.n {
            let c = b.chance(
                (0..spec.num_games)
                    .map(|j| (format!("g{j}"), d.transition[a1][j]))
                    .collect(),
            );
            b.attach(f, c);
            for (j, game) in d.secondary.iter().enumerate() {
                let key = format!("{a1}.{a2}.{j}");
                let l = b.decision(Player::Leader, format!("L2:{key}"), labels("c", spec.m));
                b.attach(c, l);
                for (row0, row1) in game[0].iter().zip(&game[1]) {
                    let fl = b.decision(Player::Follower, format!("F2:{key}"), labels("d", spec.m));
                    b.attach(l, fl);
                    for (u0, u1) in row0.iter().zip(row1) {
                        let t = b.terminal(d.stage_one[0][a1][a2] + u0, d.stage_one[1][a1][a2] + u1);
                        b.attach(fl, t);
                    }
                }
            }
        }
    }
    b.build()
}

/// First-stage payoff matrices stored in a two-stage game's metadata.
pub fn stage_one_matrices(game: &GameTree) -> Option<MatrixPair> {
    let s = game.metadata().get("stage_one")?;
    let parse = |v: &serde_json::Value| -> Option<Vec<Vec<f64>>> { serde_json::from_value(v.clone()).ok() };
    Some([parse(s.get("leader")?)?, parse(s.get("follower")?)?])
}
