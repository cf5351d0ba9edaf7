use coexbal::mesh::{generate_synthetic_mesh, KindMix, Mesh, PartitionElement, SpatialProfile};
use coexbal::sfc::{hilbert_cell, hilbert_key, partition_chunked, project_to_bins, split_1d, BinSequence, SfcConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exhaustive closest-boundary scan in exact integer arithmetic, with
/// `lambda_i = c_i * P / sum(c)`. Returns every boundary at the minimal
/// distance: an exact tie cannot survive the rounding of `lambda` to f64, so
/// either side is acceptable.
fn oracle(weights: &[u64], c: &[u64]) -> Vec<Vec<usize>> {
    let w: i128 = weights.iter().map(|&x| i128::from(x)).sum();
    let csum: i128 = c.iter().map(|&x| i128::from(x)).sum();
    let mut prefix = vec![0i128];
    for &x in weights {
        prefix.push(prefix.last().unwrap() + i128::from(x));
    }
    let mut cum = 0i128;
    c[..c.len() - 1]
        .iter()
        .map(|&ci| {
            cum += i128::from(ci);
            let dist = |b: usize| (prefix[b] * csum - cum * w).abs();
            let best = (1..weights.len()).map(dist).min().unwrap();
            (1..weights.len()).filter(|&b| dist(b) == best).collect()
        })
        .collect()
}

/// True when taking the earliest closest boundary for every cut already gives
/// strictly increasing cuts, so no repair step is involved.
fn unrepaired(want: &[Vec<usize>]) -> bool {
    want.windows(2).all(|w| w[0][0] < w[1][0] && w[0].last() < w[1].last())
}

fn matches(cuts: &[usize], want: &[Vec<usize>]) -> bool {
    cuts.len() == want.len() && cuts.iter().zip(want).all(|(c, w)| w.contains(c))
}

fn lambdas(c: &[u64]) -> Vec<f64> {
    let s: u64 = c.iter().sum();
    c.iter().map(|&x| x as f64 * c.len() as f64 / s as f64).collect()
}

#[test]
fn thirty_bins_four_parts_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    use rand::Rng;
    for _ in 0..200 {
        let weights: Vec<u64> = (0..30).map(|_| rng.random_range(1..=9)).collect();
        let c: Vec<u64> = (0..4).map(|_| rng.random_range(1..=6)).collect();
        let seq = BinSequence::from_weights(&weights.iter().map(|&x| x as f64).collect::<Vec<_>>()).unwrap();
        let p = split_1d(&seq, 4, &lambdas(&c)).unwrap();
        let want = oracle(&weights, &c);
        if unrepaired(&want) {
            assert!(matches(&p.cut_bins, &want), "weights {weights:?} c {c:?}: {:?} vs {want:?}", p.cut_bins);
        }
    }
}

proptest! {
    #[test]
    fn split_matches_oracle_when_unambiguous(
        weights in prop::collection::vec(1u64..50, 8..120),
        c in prop::collection::vec(1u64..12, 1..8),
    ) {
        prop_assume!(c.len() <= weights.len());
        let seq = BinSequence::from_weights(&weights.iter().map(|&x| x as f64).collect::<Vec<_>>()).unwrap();
        let p = split_1d(&seq, c.len(), &lambdas(&c)).unwrap();
        if c.len() > 1 {
            let want = oracle(&weights, &c);
            prop_assume!(unrepaired(&want));
            prop_assert!(matches(&p.cut_bins, &want), "{:?} vs {:?}", p.cut_bins, want);
        }
    }

    #[test]
    fn chunking_never_changes_the_partition(
        n in 1usize..3000,
        seed in any::<u64>(),
        parts in 1usize..24,
        level in 1u32..9,
        chunks in 1usize..40,
        clustered in any::<bool>(),
    ) {
        let profile = if clustered { SpatialProfile::Clustered } else { SpatialProfile::Uniform };
        let mix = KindMix::new(0.4, 0.1, 0.2, 0.3).unwrap();
        let mesh = generate_synthetic_mesh(n, mix, seed, profile).unwrap();
        let cfg = SfcConfig::new(level).unwrap();
        let bins = project_to_bins(&mesh, &cfg).unwrap().len();
        prop_assume!(parts <= bins);
        let coeffs = vec![1.0; parts];
        let one = partition_chunked(&mesh, &cfg, parts, &coeffs, 1).unwrap();
        let many = partition_chunked(&mesh, &cfg, parts, &coeffs, chunks).unwrap();
        prop_assert_eq!(&one, &many);
        let w: f64 = one.subdomain_weights.iter().sum();
        prop_assert!((w - mesh.total_weight()).abs() <= 1e-12 * mesh.total_weight());
    }

    #[test]
    fn permuted_input_gives_same_bins(n in 1usize..500, seed in any::<u64>(), level in 1u32..10) {
        let mesh = generate_synthetic_mesh(n, KindMix::default(), seed, SpatialProfile::Uniform).unwrap();
        let mut shuffled: Vec<PartitionElement> = mesh.elements().to_vec();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let other = Mesh::new(shuffled).unwrap();
        let cfg = SfcConfig::new(level).unwrap();
        prop_assert_eq!(project_to_bins(&mesh, &cfg).unwrap(), project_to_bins(&other, &cfg).unwrap());
    }

    #[test]
    fn hilbert_round_trip(level in 1u32..=20, raw in any::<[u32; 3]>()) {
        let cell = raw.map(|c| c & ((1u32 << level) - 1));
        let key = hilbert_key(cell, level).unwrap();
        prop_assert!(key < 1u64 << (3 * level));
        prop_assert_eq!(hilbert_cell(key, level).unwrap(), cell);
    }
}

fn mean_step(cells: &[[u32; 3]]) -> f64 {
    let d: f64 = cells
        .windows(2)
        .map(|w| {
            (0..3)
                .map(|i| (f64::from(w[0][i]) - f64::from(w[1][i])).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    d / (cells.len() - 1) as f64
}

#[test]
fn hilbert_order_is_at_least_as_local_as_row_major() {
    use rand::Rng;
    let level = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in [64, 256, 1024] {
        let mut cells: Vec<[u32; 3]> = (0..n)
            .map(|_| [rng.random_range(0..16), rng.random_range(0..16), rng.random_range(0..16)])
            .collect();
        cells.sort();
        cells.dedup();
        let row_major = {
            let mut c = cells.clone();
            c.sort_by_key(|c| (c[2], c[1], c[0]));
            mean_step(&c)
        };
        let hilbert = {
            let mut c = cells.clone();
            c.sort_by_key(|&c| hilbert_key(c, level).unwrap());
            mean_step(&c)
        };
        assert!(hilbert <= row_major, "n={n}: hilbert {hilbert} vs row-major {row_major}");
    }
}
