//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with --nocapture). Expected values are the published reference
//! numbers for the 64-state (133,171) code and the (23,35) worked example.

use convcrc::construction::{
    build_equivalent, classify_states, construction_tally, pud_bound_construction,
    search_class_spectra, ClassSearchOptions, DEFAULT_STATE_LIMIT,
};
use convcrc::convcode::ConvCode;
use convcrc::crc::CrcSpec;
use convcrc::crcsearch::{search_best_crc, SearchConfig as CrcSearchConfig};
use convcrc::eventsearch::{search_events, SearchConfig};
use convcrc::exclusion::{
    build_cosets, undetectable_doubles, undetectable_singles, undetectable_tuples, DoubleScope,
};
use convcrc::gf2poly::Gf2Poly;
use convcrc::mcsim::{simulate_concatenated, simulate_equivalent_fer, StopRule};
use convcrc::probability::{PairwiseMode, SnrPoint};
use convcrc::report::BoundOptions;

fn code_133_171() -> ConvCode {
    ConvCode::from_octal(&[0o133, 0o171], 6).unwrap()
}

fn code_23_35() -> ConvCode {
    ConvCode::from_octal(&[0o23, 0o35], 4).unwrap()
}

fn code_7_5() -> ConvCode {
    ConvCode::from_octal(&[0o7, 0o5], 2).unwrap()
}

fn crc(hex: &str, degree: usize) -> CrcSpec {
    CrcSpec::parse_koopman_hex(hex, degree).unwrap()
}

const TABLE_DISTANCES: [usize; 7] = [10, 12, 14, 16, 18, 20, 22];

/// Criterion 1: the original distance spectrum of (133,171) to depth 22.
#[test]
fn criterion_1_exact_spectrum_of_133_171() {
    let spectrum = search_events(&code_133_171(), &SearchConfig::new(22)).unwrap();
    let want = [11u64, 38, 193, 1331, 7275, 40406, 234969];
    for (d, w) in TABLE_DISTANCES.iter().zip(want) {
        assert_eq!(spectrum.count(*d), w, "a_{d}");
    }
    for d in (11..=21).step_by(2) {
        assert_eq!(spectrum.count(d), 0, "odd bucket {d}");
    }
    println!("criterion 1 PASS: a_10..a_22 = 11 38 193 1331 7275 40406 234969, odd empty");
}

fn zz_row(hex: &str, degree: usize) -> Vec<u64> {
    let spec = crc(hex, degree);
    let eq = build_equivalent(&spec, &code_133_171()).unwrap();
    let cls = classify_states(&eq, DEFAULT_STATE_LIMIT).unwrap();
    let spectra = search_class_spectra(&eq, &cls, &ClassSearchOptions::new(22)).unwrap();
    spectra.zz_row(&TABLE_DISTANCES)
}

/// Criterion 2: undetectable-single spectra rows of the reference table.
#[test]
fn criterion_2_zz_rows() {
    assert_eq!(zz_row("0xEA", 8), vec![0, 0, 0, 4, 36, 174, 871], "CRC-8");
    assert_eq!(zz_row("0x89", 8), vec![0, 0, 0, 1, 29, 177, 938], "Best-8");
    assert_eq!(zz_row("0xA001", 16), vec![0, 0, 0, 0, 0, 1, 3], "CRC-16");
    assert_eq!(zz_row("0x8E61", 16), vec![0, 0, 0, 0, 0, 0, 1], "Best-16");
    println!("criterion 2 PASS: zz rows for 0xEA, 0x89, 0xA001, 0x8E61 match");
}

/// Criterion 3: search winners for degrees 3..=8 (and the degree-12
/// stretch goal) at k = 1024.
#[test]
fn criterion_3_search_winners() {
    let want = [(3usize, "0x7"), (4, "0xD"), (5, "0x11"), (6, "0x29"), (7, "0x47"), (8, "0x89")];
    for (degree, hex) in want {
        let cfg = CrcSearchConfig::new(degree, code_133_171(), 1024);
        let (winner, audit) = search_best_crc(&cfg).unwrap();
        assert_eq!(winner.koopman_hex(), hex, "degree {degree}");
        assert!(!audit.tie_break_applied, "degree {degree} decided outright");
    }
    let cfg = CrcSearchConfig::new(12, code_133_171(), 1024);
    let (winner, _) = search_best_crc(&cfg).unwrap();
    assert_eq!(winner.koopman_hex(), "0xA10", "degree 12");
    println!("criterion 3 PASS: winners 0x7 0xD 0x11 0x29 0x47 0x89, degree-12 0xA10");
}

/// Criterion 4: per-distance undetectable counts for the two degree-16
/// generators at k = 1024.
#[test]
fn criterion_4_table_iii_spot_checks() {
    let code = code_133_171();
    let spectrum = search_events(&code, &SearchConfig::new(22).with_patterns()).unwrap();
    let (n, nu) = (1024 + 16, 6);

    let spec = crc("0x8E61", 16);
    let table = build_cosets(&spec).unwrap();
    let mut tally = undetectable_singles(&spectrum, &spec, n, nu).unwrap();
    tally.merge(
        &undetectable_doubles(&spectrum, &spec, &table, n, nu, 22, DoubleScope::EquivalentEvents)
            .unwrap(),
    );
    assert_eq!(tally.d_min(), Some(22), "0x8E61 d_min");
    let at22 = tally.at(22);
    assert_eq!(at22.singles, 1011, "0x8E61 singles at 22");
    assert_eq!(at22.doubles, 1424, "0x8E61 doubles at 22");
    assert_eq!(at22.total(), 2435, "0x8E61 total at 22");

    let spec = crc("0xF8F1", 16);
    let table = build_cosets(&spec).unwrap();
    let doubles =
        undetectable_doubles(&spectrum, &spec, &table, n, nu, 22, DoubleScope::EquivalentEvents)
            .unwrap();
    assert_eq!(doubles.at(22).doubles, 2860, "0xF8F1 doubles at 22");
    println!("criterion 4 PASS: 0x8E61 (22, 2435 = 1011 + 1424); 0xF8F1 2860 doubles at 22");
}

/// Criterion 5: the equivalent catastrophic encoder of the worked example.
#[test]
fn criterion_5_equivalent_code() {
    let p = CrcSpec::new(Gf2Poly::parse_powers("x^3+x+1").unwrap()).unwrap();
    let eq = build_equivalent(&p, &code_23_35()).unwrap();
    assert_eq!(eq.code.octal_string(), "255,317");
    println!("criterion 5 PASS: (23,35) with x^3+x+1 gives (255,317)");
}

/// Criterion 6: construction-method point values at 8 dB, depth 28,
/// k = 1024, within 5 percent.
#[test]
fn criterion_6_bound_point_values() {
    let snr = [SnrPoint::from_symbol_es_n0_db(8.0).unwrap()];
    let opts = BoundOptions::default(); // d_free-referenced exponential pairwise
    let code = code_133_171();

    let report = pud_bound_construction(&code, &crc("0x15", 5), 1024, &snr, 28, &opts).unwrap();
    let total = report.points[0].total;
    assert!(
        (total - 1.01e-12).abs() <= 0.05 * 1.01e-12,
        "CRC-5 0x15 at 8 dB: got {total:.3e}, want 1.01e-12 within 5%"
    );
    let crc5 = total;

    let report = pud_bound_construction(&code, &crc("0x11", 5), 1024, &snr, 28, &opts).unwrap();
    let total = report.points[0].total;
    assert!(
        (total - 1.36e-17).abs() <= 0.05 * 1.36e-17,
        "Best-5 0x11 at 8 dB: got {total:.3e}, want 1.36e-17 within 5%"
    );
    println!("criterion 6 PASS: 0x15 -> {crc5:.3e} (1.01e-12), 0x11 -> {total:.3e} (1.36e-17)");
}

/// Criterion 7: exclusion tallies, construction tallies, and pattern-space
/// brute force agree exactly on toy instances.
#[test]
fn criterion_7_cross_method_agreement() {
    let code = code_7_5();
    let nu = code.memory();
    // depth 11 keeps every undetectable error a single equivalent-code
    // event for these generators, so all three counts must coincide
    let depth = 11;
    let spectrum = search_events(&code, &SearchConfig::new(depth).with_patterns()).unwrap();
    for (hex, m, k) in [
        ("0x3", 2, 8),
        ("0x2", 2, 8),
        ("0x5", 3, 10),
        ("0x6", 3, 10),
        ("0x7", 3, 9),
    ] {
        let spec = crc(hex, m);
        let n = k + m;
        let table = build_cosets(&spec).unwrap();
        let mut exclusion_tally = undetectable_singles(&spectrum, &spec, n, nu).unwrap();
        exclusion_tally.merge(
            &undetectable_doubles(&spectrum, &spec, &table, n, nu, depth, DoubleScope::AllPatterns)
                .unwrap(),
        );
        exclusion_tally
            .merge(&undetectable_tuples(&spectrum, &spec, n, nu, depth).unwrap());

        let eq = build_equivalent(&spec, &code).unwrap();
        let cls = classify_states(&eq, DEFAULT_STATE_LIMIT).unwrap();
        let spectra = search_class_spectra(&eq, &cls, &ClassSearchOptions::new(depth)).unwrap();
        let construction = construction_tally(&spectra, &cls, n, nu, depth);

        let brute = brute_force_divisible(&code, &spec, n, depth);
        for d in 1..=depth {
            let want = brute.get(&d).copied().unwrap_or(0);
            assert_eq!(exclusion_tally.total_at(d), want, "{hex} exclusion at {d}");
            assert_eq!(construction.total_at(d), want, "{hex} construction at {d}");
        }
    }
    println!("criterion 7 PASS: exclusion = construction = brute force on (7,5) toys");
}

fn brute_force_divisible(
    code: &ConvCode,
    spec: &CrcSpec,
    n: usize,
    depth: usize,
) -> std::collections::BTreeMap<usize, u64> {
    let mut out = std::collections::BTreeMap::new();
    for w in 1u64..(1u64 << n) {
        let bits: Vec<u8> = (0..n).map(|j| ((w >> (n - 1 - j)) & 1) as u8).collect();
        let coded = code.encode(&bits);
        let weight = coded.iter().filter(|&&b| b == 1).count();
        if weight > depth {
            continue;
        }
        let poly = Gf2Poly::from_bits_msb_first(&bits);
        if Gf2Poly::divides(spec.poly(), &poly).unwrap() {
            *out.entry(weight).or_insert(0) += 1;
        }
    }
    out
}

/// Criterion 8: coset partition properties and the Delta correspondence
/// for 200 random generators up to degree 8.
#[test]
fn criterion_8_coset_and_delta_properties() {
    use rand::prelude::*;
    let mut rng = StdRng::seed_from_u64(2026);
    let code = code_7_5();
    let mut checked = 0;
    while checked < 200 {
        let m = rng.random_range(2..=8usize);
        let value = (1u64 << (m - 1)) | rng.random_range(0..(1u64 << (m - 1)));
        let spec = CrcSpec::from_koopman(value, m).unwrap();
        let table = build_cosets(&spec).unwrap();
        // disjoint cover with positions advancing under multiplication by x
        let mut seen = vec![false; 1 << m];
        let mut total = 0u64;
        for id in 0..table.coset_count() as u32 {
            let members = table.members(id);
            assert_eq!(members.len() as u64, table.size_of(id));
            for &r in &members {
                assert!(!seen[r as usize], "residue {r} in two cosets");
                seen[r as usize] = true;
            }
            total += table.size_of(id);
        }
        assert_eq!(total, 1 << m);
        assert!(seen.iter().all(|&s| s));

        // Delta sets map onto the coset of their representative residue
        let eq = build_equivalent(&spec, &code).unwrap();
        let cls = classify_states(&eq, DEFAULT_STATE_LIMIT).unwrap();
        for r in 1..(1u64 << m) {
            let mut members = cls.delta_members(r);
            members.sort_unstable();
            let mut coset = table.members(table.coset_of(r));
            coset.sort_unstable();
            assert_eq!(members, coset, "m={m} p={value:#x} residue {r}");
        }
        checked += 1;
    }
    println!("criterion 8 PASS: 200 random generators up to degree 8");
}

/// Criterion 9: Monte Carlo band check against the construction bound for
/// the (23,35) + x^3+x+1 example at n = 1024.
#[test]
fn criterion_9_monte_carlo_band() {
    let code = code_23_35();
    let p = crc("0x5", 3); // x^3+x+1
    let k = 1021;
    // chosen so the exact-pairwise construction bound sits inside [1e-5, 1e-4]
    let snr = SnrPoint::from_symbol_es_n0_db(5.0).unwrap();
    let opts = BoundOptions {
        pairwise: PairwiseMode::Exact,
        ..BoundOptions::default()
    };
    let report = pud_bound_construction(&code, &p, k, &[snr], 20, &opts).unwrap();
    let bound = report.points[0].total;
    assert!(
        (1e-5..=1e-4).contains(&bound),
        "construction bound {bound:.3e} outside the band window"
    );

    let stop = StopRule {
        min_events: 35,
        max_frames: 100_000_000,
    };
    let sim = simulate_concatenated(&p, &code, k, snr, stop, 20260809);
    assert!(sim.undetected >= 30, "not enough undetected events");
    let rate = sim.undetected_rate.rate;
    assert!(
        rate <= bound,
        "simulated undetected rate {rate:.3e} above the bound {bound:.3e}"
    );
    assert!(
        rate >= bound / 3.0,
        "simulated undetected rate {rate:.3e} below bound/3 = {:.3e}",
        bound / 3.0
    );

    // Same seed and same frame range: the per-frame noise is identical, and
    // the equivalent code's codebook is the divisible subset of the
    // original's, so every undetected frame is also an equivalent-code
    // frame error and the FER dominates frame for frame.
    let eq = build_equivalent(&p, &code).unwrap();
    let fer = simulate_equivalent_fer(
        &eq,
        k,
        snr,
        StopRule {
            min_events: u64::MAX,
            max_frames: sim.frames,
        },
        20260809,
    );
    assert_eq!(fer.frames, sim.frames);
    assert!(
        fer.frame_error_rate.rate >= rate,
        "equivalent FER {:.3e} below the undetected rate {rate:.3e}",
        fer.frame_error_rate.rate
    );
    println!(
        "criterion 9 PASS: bound {bound:.3e}, simulated {rate:.3e} ({} events / {} frames), equivalent FER {:.3e}",
        sim.undetected, sim.frames, fer.frame_error_rate.rate
    );
}
