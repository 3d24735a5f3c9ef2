//! Release acceptance suite: one integration test per numbered criterion
//! of the project's acceptance checklist (mirrored in the README), so the
//! harness output reads as one pass/fail line per criterion.  Every
//! guarantee is asserted exactly as stated: exact rational equalities,
//! stated runtime caps, and stated confidence-interval checks.
//!
//! Two criteria state numeric targets that the implemented models
//! measurably do not attain: criterion 10's limit-density values and both
//! of criterion 12's experiment statistics.  Those tests run the full
//! measurement faithfully and fail with diagnostics that report the
//! measured values next to the stated ones; they are deliberately not
//! weakened to pass.  See the respective panic messages for the numbers
//! and the one-line reasons.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;

use order_flags::algebra::{flag_basis, AlgebraElement, DensityCache, Flag, LimitVector};
use order_flags::chirotope::{CanonicalCode, Chirotope};
use order_flags::geometry::format_rational;
use order_flags::limits::{
    cantor_vs_words_crosscheck, estimate_density, exact_cup_probability, is_cup,
    spherical_transform, two_circles_experiment, AffineMap, CounterRng, Estimate, MeasureModel,
    Rotation3,
};
use order_flags::sdp::{
    build_instance, certificate_with_max_b, default_roots, emit_sdpa, ingest_solution,
    max_feasible_b, parse_sdpa, toy_solve, verify_certificate, Certificate, SdpError, Square,
    TargetSpec,
};
use order_flags::store::OrderTypeStore;
use order_flags::PointSet;

static STORE: Lazy<OrderTypeStore> = Lazy::new(|| {
    let mut store = OrderTypeStore::new();
    store
        .enumerate_up_to(8)
        .expect("enumeration through size 8 succeeds");
    store
});

static CACHE: Lazy<DensityCache<'static>> = Lazy::new(|| DensityCache::new(&STORE));

fn ratio(s: &str) -> BigRational {
    s.parse().expect("valid rational literal")
}

fn rational_to_f64(v: &BigRational) -> f64 {
    v.to_f64().expect("rational fits in an f64")
}

/// The unique size-4 type with a point inside a triangle.
fn tri_pt4() -> CanonicalCode {
    STORE.codes_with_hull(4, 3)[0].clone()
}

/// The three size-5 types, by hull size (5, 4, 3).
fn five_types() -> (CanonicalCode, CanonicalCode, CanonicalCode) {
    (
        STORE.convex_code(5).unwrap(),
        STORE.codes_with_hull(5, 4)[0].clone(),
        STORE.codes_with_hull(5, 3)[0].clone(),
    )
}

/// Dyadic rotation parameter in [−1/4, 1/4): small enough that every
/// point of a quarter-box witness stays in the upper hemisphere.
fn small_skew(rng: &mut CounterRng) -> BigRational {
    (rng.next_dyadic(20) - ratio("1/2")) / BigRational::from_integer(2.into())
}

/// Direct affine map taking a witness into the box [−1/4, 1/4]².
fn shrink_to_quarter_box(ps: &PointSet) -> AffineMap {
    let xs = ps.points().iter().map(|p| &p.x);
    let ys = ps.points().iter().map(|p| &p.y);
    let lo_x = xs.clone().min().expect("witness is nonempty").clone();
    let hi_x = xs.max().expect("witness is nonempty").clone();
    let lo_y = ys.clone().min().expect("witness is nonempty").clone();
    let hi_y = ys.max().expect("witness is nonempty").clone();
    let range = (&hi_x - &lo_x).max(&hi_y - &lo_y).max(BigRational::one());
    let scale = ratio("1/2") / &range;
    let cx = (&lo_x + &hi_x) / BigRational::from_integer(2.into());
    let cy = (&lo_y + &hi_y) / BigRational::from_integer(2.into());
    AffineMap::new(
        scale.clone(),
        BigRational::zero(),
        BigRational::zero(),
        scale.clone(),
        -(&scale * &cx),
        -(&scale * &cy),
    )
    .expect("shrink map is direct")
}

/// Counts of order types at sizes 4, 5, 6 and 8, with the stated runtime
/// caps: sizes through 6 in under five seconds, size 8 in under thirty
/// minutes.
#[test]
fn criterion_01_enumeration_counts_and_runtimes() {
    let mut store = OrderTypeStore::new();
    let t_small = Instant::now();
    store
        .enumerate_up_to(6)
        .expect("enumeration through size 6 succeeds");
    let small = t_small.elapsed();
    assert_eq!(store.codes(3).len(), 1, "count at size 3");
    assert_eq!(store.codes(4).len(), 2, "count at size 4");
    assert_eq!(store.codes(5).len(), 3, "count at size 5");
    assert_eq!(store.codes(6).len(), 20, "count at size 6");
    assert!(
        small < Duration::from_secs(5),
        "sizes through 6 took {small:?}, cap 5 s"
    );
    store.enumerate(7).expect("size 7 succeeds");
    assert_eq!(store.codes(7).len(), 242, "count at size 7");
    let t_eight = Instant::now();
    store.enumerate(8).expect("size 8 succeeds");
    let eight = t_eight.elapsed();
    assert_eq!(store.codes(8).len(), 6405, "count at size 8");
    assert!(
        eight < Duration::from_secs(1800),
        "size 8 took {eight:?}, cap 30 min"
    );
    println!("sizes through 6 in {small:?}; size 8 in {eight:?}");
}

/// Flag basis sizes: 2 over the empty root at level 4, 44 over the
/// two-point root at level 5, 468 and 393 over the two four-point roots
/// at level 6; plus the multiset of basis sizes over the twenty six-point
/// roots at level 7.
#[test]
fn criterion_02_flag_basis_sizes() {
    let convex4_root = STORE.convex_code(4).unwrap().decode();
    let tri_pt_root = tri_pt4().decode();
    assert_eq!(
        flag_basis(&STORE, &Chirotope::convex(0), 4).unwrap().len(),
        2,
        "empty root, level 4"
    );
    assert_eq!(
        flag_basis(&STORE, &Chirotope::convex(2), 5).unwrap().len(),
        44,
        "two-point root, level 5"
    );
    assert_eq!(
        flag_basis(&STORE, &convex4_root, 6).unwrap().len(),
        468,
        "convex-4 root, level 6"
    );
    assert_eq!(
        flag_basis(&STORE, &tri_pt_root, 6).unwrap().len(),
        393,
        "triangle-plus-point root, level 6"
    );
    // The twenty size-6 roots carry an arbitrary labelling, so their
    // basis sizes are compared as a multiset.
    let mut lens: Vec<usize> = STORE
        .codes(6)
        .iter()
        .map(|c| flag_basis(&STORE, &c.decode(), 7).unwrap().len())
        .collect();
    lens.sort_unstable();
    let mut expected = vec![
        122, 112, 114, 101, 101, 103, 106, 103, 103, 120, 102, 108, 94, 90, 91, 91, 95, 95, 92,
        104,
    ];
    expected.sort_unstable();
    assert_eq!(lens, expected, "size-6-rooted basis sizes at level 7");
}

/// The minimum density of convex position over four points among all
/// size-8 order types is exactly 19/70.
#[test]
fn criterion_03_minimum_convex_four_density_at_size_eight() {
    let convex4 = STORE.convex_code(4).unwrap();
    let col = STORE
        .codes(4)
        .iter()
        .position(|c| *c == convex4)
        .expect("convex-4 is a stored size-4 code");
    let table = CACHE.density_table(4, 8).unwrap();
    let codes = STORE.codes(8);
    let (arg, min) = table
        .iter()
        .enumerate()
        .map(|(i, row)| (i, row[col].clone()))
        .min_by(|a, b| a.1.cmp(&b.1))
        .expect("size 8 is nonempty");
    assert_eq!(
        min,
        ratio("19/70"),
        "minimum convex-4 density at size 8, attained at {}",
        codes[arg]
    );
    println!("min p(convex-4, ·) over size 8 = {} at {}", min, codes[arg]);
}

/// Conditioning through every intermediate size k: for all types of size
/// at most 5, all k up to 7 and all size-7 types, the density equals the
/// sum over intermediate types of the two-step product, exactly.
#[test]
fn criterion_04_conditioning_identities_hold_exactly() {
    let omegas = STORE.codes(7);
    let mut checked = 0u64;
    for s in 0..=5usize {
        let small_codes = STORE.codes(s);
        let d_s7 = CACHE.density_table(s, 7).unwrap();
        for k in s..=7 {
            let mid_count = STORE.codes(k).len();
            let d_sk = CACHE.density_table(s, k).unwrap();
            let d_k7 = CACHE.density_table(k, 7).unwrap();
            for (oi, omega) in omegas.iter().enumerate() {
                for (wi, w) in small_codes.iter().enumerate() {
                    let mut total = BigRational::zero();
                    for si in 0..mid_count {
                        total += &d_sk[si][wi] * &d_k7[oi][si];
                    }
                    assert_eq!(
                        d_s7[oi][wi], total,
                        "conditioning failed for {w} through size {k} in {omega}"
                    );
                    checked += 1;
                }
            }
        }
    }
    println!("checked {checked} conditioning identities exactly");
}

/// Lifting the convex-4 element to size 5 produces coefficients 1, 3/5
/// and 1/5 on the hull-5, hull-4 and hull-3 types.
#[test]
fn criterion_05_lift_of_convex_four_to_size_five() {
    let convex4 = STORE.convex_code(4).unwrap();
    let (hull5, hull4, hull3) = five_types();
    let lifted = AlgebraElement::of_type(&convex4).lift(5, &CACHE).unwrap();
    assert_eq!(lifted.terms().len(), 3, "three size-5 terms");
    assert_eq!(lifted.coefficient(&hull5), ratio("1"), "hull-5 coefficient");
    assert_eq!(lifted.coefficient(&hull4), ratio("3/5"), "hull-4 coefficient");
    assert_eq!(lifted.coefficient(&hull3), ratio("1/5"), "hull-3 coefficient");
}

/// Averaging the three triangle-rooted flags yields coefficients 1/2,
/// 1/6 and 1/8 on their underlying types.
#[test]
fn criterion_06_averaging_coefficients() {
    let triangle = PointSet::from_integer_coords(&[(0, 0), (1, 0), (0, 1)]);
    let f1 = Flag::from_point_set(&triangle, &[0, 1, 2]).unwrap();
    let avg1 = AlgebraElement::of_flag(&f1).average(&CACHE).unwrap();
    assert_eq!(avg1.terms().len(), 1);
    assert_eq!(
        avg1.coefficient(&STORE.convex_code(3).unwrap()),
        ratio("1/2"),
        "rooted triangle"
    );

    let square = PointSet::from_integer_coords(&[(0, 0), (1, 0), (1, 1), (0, 1)]);
    let f2 = Flag::from_point_set(&square, &[0, 1, 2]).unwrap();
    let avg2 = AlgebraElement::of_flag(&f2).average(&CACHE).unwrap();
    assert_eq!(avg2.terms().len(), 1);
    assert_eq!(
        avg2.coefficient(&STORE.convex_code(4).unwrap()),
        ratio("1/6"),
        "convex four rooted at three"
    );

    let tri_pt = PointSet::from_integer_coords(&[(0, 0), (3, 0), (0, 3), (1, 1)]);
    let f3 = Flag::from_point_set(&tri_pt, &[0, 1, 2]).unwrap();
    let avg3 = AlgebraElement::of_flag(&f3).average(&CACHE).unwrap();
    assert_eq!(avg3.terms().len(), 1);
    assert_eq!(
        avg3.coefficient(&tri_pt4()),
        ratio("1/8"),
        "triangle rooted at its hull"
    );
}

/// The single-square certificate with coefficients 6/25 and −11/125 over
/// the empty root certifies exactly 298819/1093750 at size 8 in max-b
/// mode, verifies in under two minutes, and a one-entry perturbation is
/// rejected with a concrete violating order type.
#[test]
fn criterion_07_single_square_certificate_at_size_eight() {
    let convex4 = STORE.convex_code(4).unwrap();
    let t0 = Instant::now();
    let target = TargetSpec::density_of(&CACHE, &convex4, 8).unwrap();
    let instance = build_instance(&STORE, target, vec![Chirotope::convex(0)]).unwrap();
    let basis = instance.basis(0);
    assert_eq!(basis.len(), 2, "empty-rooted basis at level 4");
    let mut u = vec![BigRational::zero(); basis.len()];
    let mut convex_slot = usize::MAX;
    for (i, flag) in basis.iter().enumerate() {
        if flag.unrooted_code() == convex4 {
            u[i] = ratio("6/25");
            convex_slot = i;
        } else {
            u[i] = ratio("-11/125");
        }
    }
    assert!(
        convex_slot != usize::MAX,
        "convex-4 flag present in the empty-rooted basis"
    );
    let square = Square {
        root: 0,
        lambda: BigRational::one(),
        u,
    };
    let cert = certificate_with_max_b(&instance, vec![square]).unwrap();
    assert_eq!(cert.b, ratio("298819/1093750"), "max feasible bound");
    let (b, tight) = max_feasible_b(&instance, &cert.squares).unwrap();
    assert_eq!(b, cert.b);
    let verified = verify_certificate(&instance, &cert).unwrap();
    assert_eq!(verified, cert.b, "verification reproduces the bound");
    let elapsed = t0.elapsed();
    assert!(
        elapsed < Duration::from_secs(120),
        "certificate built and verified in {elapsed:?}, cap 2 min"
    );

    // A one-entry perturbation must be rejected with a witness.
    let mut tampered = cert.clone();
    tampered.squares[0].u[convex_slot] += BigRational::one();
    match verify_certificate(&instance, &tampered) {
        Err(SdpError::Violation {
            code,
            target,
            achieved,
        }) => {
            println!("perturbed certificate rejected at {code}: target {target} < certified {achieved}");
        }
        other => panic!("perturbed certificate was not rejected: {other:?}"),
    }
    println!("b = {} (tight at {tight}) verified in {elapsed:?}", cert.b);
}

/// The product-split approximation error is bounded by the product of
/// the small sizes over the big size, exactly, for all pairs of types of
/// size at most 3 inside every size-7 type.
#[test]
fn criterion_08_product_split_error_bound() {
    let omegas = STORE.codes(7);
    let mut checked = 0u64;
    for s1 in 1..=3usize {
        for s2 in 1..=3usize {
            let n1 = STORE.codes(s1).len();
            let n2 = STORE.codes(s2).len();
            let mid = STORE.codes(s1 + s2).len();
            let d1 = CACHE.density_table(s1, 7).unwrap();
            let d2 = CACHE.density_table(s2, 7).unwrap();
            let dm = CACHE.density_table(s1 + s2, 7).unwrap();
            let sp = CACHE.split_table(s1, s2, s1 + s2).unwrap();
            let bound = BigRational::new(BigInt::from(s1 * s2), BigInt::from(7));
            for (oi, omega) in omegas.iter().enumerate() {
                for i1 in 0..n1 {
                    for i2 in 0..n2 {
                        let lhs = &d1[oi][i1] * &d2[oi][i2];
                        let mut rhs = BigRational::zero();
                        for m in 0..mid {
                            rhs += &sp[m][i1][i2] * &dm[oi][m];
                        }
                        let diff = (lhs - rhs).abs();
                        assert!(
                            diff <= bound,
                            "split error {diff} exceeds {bound} for sizes ({s1},{s2}) in {omega}"
                        );
                        checked += 1;
                    }
                }
            }
        }
    }
    println!("checked {checked} product-split bounds exactly");
}

/// Evaluating against the two stated vectors gives exactly 1/32 for the
/// triangle-plus-point element at size 4 and 3/64 for its product with a
/// point at size 5.
#[test]
fn criterion_09_evaluate_the_two_stated_vectors() {
    let (hull5, hull4, hull3) = five_types();
    let ell5 = LimitVector::new(
        5,
        [
            (hull5, ratio("59/64")),
            (hull4, ratio("5/128")),
            (hull3, ratio("5/128")),
        ],
    )
    .unwrap();
    assert!(ell5.is_distribution());
    let ell4 = LimitVector::new(
        4,
        [
            (STORE.convex_code(4).unwrap(), ratio("31/32")),
            (tri_pt4(), ratio("1/32")),
        ],
    )
    .unwrap();
    assert!(ell4.is_distribution());
    let tri_pt = AlgebraElement::of_type(&tri_pt4());
    let point = AlgebraElement::of_type(&STORE.convex_code(1).unwrap());
    assert_eq!(tri_pt.evaluate(&ell4).unwrap(), ratio("1/32"));
    let product = tri_pt.product(&point, &CACHE).unwrap();
    assert_eq!(product.evaluate(&ell5).unwrap(), ratio("3/64"));
}

/// Monte Carlo estimates from the degenerate two-circle limit against
/// the stated densities 1/16, 5/64 and 5/64, at one million trials each,
/// seed-reproducible, under two minutes per estimate.
///
/// Expected to fail: the stated values are not the densities of this
/// model.  Conditioning on the number of outer points gives the
/// triangle-plus-point density (4·½ + 6·½ + 4·¼)/16 = 3/8, which the
/// measurement below reproduces; the stated 1/16 counts only the stratum
/// with exactly one inner point.  The stated size-5 values are likewise
/// inconsistent with the exact conditioning identity, which forces
/// ℓ(tri+pt) = (2/5)·ℓ(hull-4 of 5) + (4/5)·ℓ(hull-3 of 5): with the
/// stated numbers the right side is 3/32, not 1/16.  The panic message
/// reports every measured value next to its stated one.
#[test]
fn criterion_10_degenerate_two_circle_limit_targets() {
    let model = MeasureModel::two_circles_limit();
    let (_, hull4, hull3) = five_types();
    let targets = [
        ("triangle-plus-point", tri_pt4(), ratio("1/16"), 20_260_810u64),
        ("hull-3 of five", hull3, ratio("5/64"), 20_260_811),
        ("hull-4 of five", hull4, ratio("5/64"), 20_260_812),
    ];
    let mut lines = Vec::new();
    let mut all_within = true;
    let mut first: Option<Estimate> = None;
    for (name, code, stated, seed) in &targets {
        let t0 = Instant::now();
        let est = estimate_density(&model, code, 1_000_000, *seed).unwrap();
        let dt = t0.elapsed();
        let stated_f = rational_to_f64(stated);
        let within = (est.mean - stated_f).abs() <= est.ci95;
        all_within &= within;
        lines.push(format!(
            "{name}: measured {:.6} ± {:.6} in {dt:?} (seed {seed}) vs stated {} = {:.6} -> {}",
            est.mean,
            est.ci95,
            format_rational(stated),
            stated_f,
            if within { "within CI" } else { "OUTSIDE CI" }
        ));
        assert!(
            dt < Duration::from_secs(120),
            "{name}: estimate took {dt:?}, cap 2 min\n{}",
            lines.join("\n")
        );
        if first.is_none() {
            first = Some(est);
        }
    }
    let first = first.unwrap();
    let again = estimate_density(&model, &targets[0].1, 1_000_000, targets[0].3).unwrap();
    assert_eq!(
        (first.successes, first.trials),
        (again.successes, again.trials),
        "same seed, same count"
    );
    assert!(
        all_within,
        "stated densities are outside the 95% confidence intervals:\n{}",
        lines.join("\n")
    );
}

/// The exact cup probability is 1/7 at four words and 1/42 at five, and
/// a seeded word-model Monte Carlo estimate at four words agrees with
/// 1/7 within its 95% confidence interval.
#[test]
fn criterion_11_binary_word_cups() {
    assert_eq!(exact_cup_probability(4).unwrap(), ratio("1/7"));
    assert_eq!(exact_cup_probability(5).unwrap(), ratio("1/42"));
    let model = MeasureModel::binary_words(32).unwrap();
    let trials = 100_000u64;
    let seed = 2026u64;
    let mut hits = 0u64;
    for i in 0..trials {
        let words = model.sample_words(4, seed.wrapping_add(i)).unwrap();
        if is_cup(&words).unwrap() {
            hits += 1;
        }
    }
    let est = Estimate::from_counts(hits, trials, seed);
    let target = 1.0 / 7.0;
    assert!(
        (est.mean - target).abs() <= est.ci95,
        "cup estimate {:.6} ± {:.6} vs exact 1/7 = {:.6}",
        est.mean,
        est.ci95,
        target
    );
    println!(
        "cup probability at 4 words: measured {:.6} ± {:.6}, exact 1/7",
        est.mean, est.ci95
    );
}

/// Two-circle experiment statistics at inner radius t = 1/100: the hull
/// fraction lies in [0.49, 0.51] in at least 99 of 100 seeded trials at
/// 2500 points, and the covering-edge median strictly increases from 400
/// to 2500 points.
///
/// Both clauses are expected to fail, and the panic message reports the
/// measured statistics for each:
///
/// * the circle assignment is a fair coin per point, so the hull-point
///   count at N = 2500 is Binomial(2500, 1/2) with standard deviation
///   25 = 0.01·N; the window is ±1σ, a trial lands inside it with
///   probability ≈ 0.69, and 99 of 100 is essentially impossible
///   (≈ 3·10⁻¹⁴);
/// * a triangle erected on a hull edge can contain every interior point
///   only if the edge subtends an outer-circle gap of at least
///   4t = 0.04 rad, so at fixed t the covering-edge count decays towards
///   zero once typical gaps fall below that threshold — at 2500 points
///   the ~1250 outer points have mean gap 2π/1250 ≈ 0.005, and a median
///   of zero, rather than an increase, is the accurate outcome.
#[test]
fn criterion_12_two_circle_hull_statistics() {
    let t = ratio("1/100");
    let rep_small = two_circles_experiment(20, &t, 100, 40_001).unwrap();
    let rep_large = two_circles_experiment(50, &t, 100, 40_002).unwrap();
    assert_eq!(rep_small.n_points, 400);
    assert_eq!(rep_large.n_points, 2500);
    let within = rep_large.fraction_within(0.49, 0.51);
    let med_small = rep_small.covering_edge_median();
    let med_large = rep_large.covering_edge_median();
    let window_ok = within >= 99;
    let median_ok = med_large > med_small;
    let lines = [
        format!(
            "hull fraction in [0.49, 0.51] in {within}/100 trials at 2500 points, needed 99 \
             (hull-point count is Binomial(2500, 1/2) with sigma = 25, so the window is +-1 \
             sigma and ~69 in-window trials are expected) -> {}",
            if window_ok { "ok" } else { "MISSED" }
        ),
        format!(
            "covering-edge median {med_small} at 400 points vs {med_large} at 2500, needed a \
             strict increase (a covering triangle needs a hull edge subtending an outer gap \
             >= 4t = 0.04 rad, and at 2500 points the mean outer gap is ~0.005, so the count \
             decays to zero at fixed t) -> {}",
            if median_ok { "ok" } else { "MISSED" }
        ),
    ];
    println!("{}", lines.join("\n"));
    assert!(
        window_ok && median_ok,
        "two-circle statistics miss their stated targets:\n{}",
        lines.join("\n")
    );
}

/// One thousand Cayley rotations applied to every stored witness of size
/// at most 6 (shrunk into the quarter box) preserve all canonical codes.
#[test]
fn criterion_13_cayley_rotations_preserve_codes() {
    let witnesses: Vec<(CanonicalCode, PointSet, AffineMap)> = (3..=6)
        .flat_map(|n| {
            STORE
                .records(n)
                .unwrap()
                .iter()
                .map(|r| (r.code.clone(), r.witness.clone(), shrink_to_quarter_box(&r.witness)))
                .collect::<Vec<_>>()
        })
        .collect();
    assert_eq!(witnesses.len(), 26, "stored witnesses of sizes 3 through 6");
    let mut rng = CounterRng::new(1_000_003);
    let mut checks = 0u64;
    for round in 0..1000 {
        let s1 = small_skew(&mut rng);
        let s2 = small_skew(&mut rng);
        let s3 = small_skew(&mut rng);
        let rot = Rotation3::cayley(&s1, &s2, &s3);
        for (code, ps, shrink) in &witnesses {
            let transformed = spherical_transform(ps, &rot, shrink).unwrap();
            let after = Chirotope::of(&transformed).unwrap().canonical_code();
            assert_eq!(
                *code, after,
                "canonical code changed under rotation {round} for {code}"
            );
            checks += 1;
        }
    }
    assert_eq!(checks, 26_000);
    println!("1000 rotations × 26 witnesses preserved every canonical code");
}

/// The Cantor-rectangle geometry at (a, b) = (1/4, 1/16) and the binary
/// word model give agreeing density estimates, within combined 95%
/// confidence intervals at one hundred thousand trials.
#[test]
fn criterion_14_cantor_versus_words_crosscheck() {
    let a = ratio("1/4");
    let b = ratio("1/16");
    let cases = [
        ("convex-4", STORE.convex_code(4).unwrap(), 77_001u64),
        ("triangle-plus-point", tri_pt4(), 77_002),
    ];
    for (name, code, seed) in cases {
        let rep = cantor_vs_words_crosscheck(&a, &b, &code, 100_000, seed).unwrap();
        assert!(
            rep.agree,
            "{name}: cantor {:.6} vs words {:.6}, |diff| {:.6} > combined CI {:.6}",
            rep.cantor.mean, rep.words.mean, rep.difference, rep.combined_ci
        );
        println!(
            "{name}: cantor {:.6} ± {:.6}, words {:.6} ± {:.6}",
            rep.cantor.mean, rep.cantor.ci95, rep.words.mean, rep.words.ci95
        );
    }
}

/// Full external-certificate flow at size 6: emit the problem file,
/// solve it, ingest the solution text, save the certificate as JSON,
/// load it back and verify a strictly positive exact bound.
#[test]
fn criterion_15_external_certificate_flow_at_size_six() {
    let dir = tempfile::tempdir().unwrap();
    let convex4 = STORE.convex_code(4).unwrap();
    let target = TargetSpec::density_of(&CACHE, &convex4, 6).unwrap();
    let roots = default_roots(&STORE, 6).unwrap();
    let instance = build_instance(&STORE, target, roots).unwrap();

    let problem_path = dir.path().join("instance.dat-s");
    emit_sdpa(&instance, &problem_path).unwrap();
    let emitted = std::fs::read_to_string(&problem_path).unwrap();
    assert!(
        parse_sdpa(&emitted).is_ok(),
        "emitted problem file parses back"
    );

    let solution = toy_solve(&instance, 400).unwrap();
    let denominator = BigInt::one() << 32;
    let (cert, report) = ingest_solution(&instance, &solution, &denominator).unwrap();
    let cert_path = dir.path().join("certificate.json");
    cert.save(&cert_path).unwrap();
    let loaded = Certificate::load(&cert_path).unwrap();
    assert_eq!(loaded, cert, "JSON round trip");
    let b = verify_certificate(&instance, &loaded).unwrap();
    assert_eq!(b, loaded.b);
    assert!(b > BigRational::zero(), "certified bound {b} is positive");
    println!(
        "ingested {} squares (shifts {:?}, dropped pivots {:?}); certified b = {}",
        loaded.squares.len(),
        report.shifts,
        report.dropped_pivots,
        b
    );
}
