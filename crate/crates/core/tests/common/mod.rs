#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use hyperdoc::gyroball::{self, BallParams, BallPoint};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const CLASSES: [&str; 3] = ["alpha", "beta", "gamma"];
pub const DIM: usize = 10;
pub const WORDS_PER_CLASS: usize = 40;
pub const SHARED_WORDS: usize = 10;
pub const DOCS: usize = 300;

/// Random direction scaled to Euclidean norm `r`.
pub fn random_vector(rng: &mut impl Rng, dim: usize, r: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x * r / n).collect()
}

/// Uniformly distributed point of the open ball with norm below `max_norm`.
pub fn random_ball_point(rng: &mut impl Rng, dim: usize, max_norm: f64) -> Vec<f64> {
    let r = max_norm * rng.gen::<f64>().powf(1.0 / dim as f64);
    random_vector(rng, dim, r)
}

pub struct SyntheticFiles {
    pub dir: tempfile::TempDir,
    pub corpus: PathBuf,
    pub poincare: PathBuf,
    pub euclidean: PathBuf,
}

/// Three-class corpus whose class vocabularies sit in disjoint geodesic
/// balls around `0.5·e_k`.
///
/// Each word is `0.5·e_k ⊕ u` with `‖u‖ ≤ 0.1`, so every word lies within
/// Poincaré distance `2 artanh(0.1) ≈ 0.2` of its class center while the
/// centers are about 1.9 apart. Documents mix 8 to 16 class words with an
/// occasional shared word near the origin and an occasional OOV token.
pub fn synthetic_corpus(seed: u64) -> SyntheticFiles {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ball = BallParams::default();
    let mut embeddings = String::new();

    for (k, name) in CLASSES.iter().enumerate() {
        let mut center = vec![0.0; DIM];
        center[k] = 0.5;
        let center = BallPoint::unit(center).unwrap();
        for j in 0..WORDS_PER_CLASS {
            let u = BallPoint::unit(random_ball_point(&mut rng, DIM, 0.1)).unwrap();
            let p = gyroball::mobius_add(&center, &u, &ball).unwrap();
            embeddings.push_str(&entry(&format!("{name}{j}"), p.coords()));
        }
    }
    for j in 0..SHARED_WORDS {
        embeddings.push_str(&entry(&format!("common{j}"), &random_ball_point(&mut rng, DIM, 0.05)));
    }

    let mut corpus = String::new();
    for d in 0..DOCS {
        let k = d % CLASSES.len();
        let len = rng.gen_range(8..=16);
        let words: Vec<String> = (0..len)
            .map(|_| {
                let roll: f64 = rng.gen();
                if roll < 0.1 {
                    format!("common{}", rng.gen_range(0..SHARED_WORDS))
                } else if roll < 0.15 {
                    format!("unknown{}", rng.gen_range(0..100))
                } else {
                    format!("{}{}", CLASSES[k], rng.gen_range(0..WORDS_PER_CLASS))
                }
            })
            .collect();
        corpus.push_str(&format!("{}\t{}\n", CLASSES[k], words.join(" ")));
    }

    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| -> PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    };
    let corpus_path = write("corpus.tsv", &corpus);
    let poincare = write("poincare.txt", &embeddings);
    let euclidean = write("euclidean.txt", &embeddings);
    SyntheticFiles {
        corpus: corpus_path,
        poincare,
        euclidean,
        dir,
    }
}

fn entry(token: &str, v: &[f64]) -> String {
    let nums: Vec<String> = v.iter().map(|x| format!("{x:.17e}")).collect();
    format!("{token} {}\n", nums.join(" "))
}

pub fn bin_path() -> &'static Path {
    Path::new(env!("CARGO_BIN_EXE_hyperdoc"))
}
