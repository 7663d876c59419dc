use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use khoburn::actions::{musyt_to_sz, validate_musyt, validate_sz};
use khoburn::burnside::validate_functor;
use khoburn::corpus::periodic_braid;
use khoburn::cube::{enumerate_chains, face_poset, CubeVertex};
use khoburn::khovanov::{braid_closure, ckh, from_pd_json, homology, homology_euler, khovanov_functor, state_sum, Coefficients, LaurentPoly};
use khoburn::linalg::F2Matrix;
use khoburn::periodic::{induced_action, module_resolution, validate_periodic, GroupModule, PeriodicDiagram};
use khoburn::realize::{both_routes, compare_realizations};
use khoburn::suites::{generated_subjects, roundtrip_report};

fn braid_word(strands: usize, len: usize) -> impl Strategy<Value = Vec<i32>> {
    let gens = (strands - 1) as i32;
    prop::collection::vec((1..=gens, any::<bool>()).prop_map(|(g, pos)| if pos { g } else { -g }), 1..=len)
}

fn poly() -> impl Strategy<Value = LaurentPoly> {
    prop::collection::vec((-4i64..=4, -3i64..=3), 0..4).prop_map(|terms| {
        let mut p = LaurentPoly::default();
        for (e, c) in terms {
            p.add(e, c);
        }
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn interval_chain_counts(r in 1usize..=5, mask in 0u64..32) {
        let u = CubeVertex::new((1u64 << r) - 1, r).unwrap();
        let v = CubeVertex::new(mask & ((1u64 << r) - 1), r).unwrap();
        let d = r - v.norm();
        let maximal = enumerate_chains(&u, &v, d).len();
        prop_assert_eq!(maximal, (1..=d).product::<usize>());
        if d >= 1 {
            let p = face_poset(&u, &v).unwrap();
            prop_assert_eq!(p.euler_characteristic(), 1);
            prop_assert_eq!(p.f_vector()[0], maximal);
        }
    }

    #[test]
    fn laurent_ring_laws(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        let mut bc = b.clone();
        for (&e, &x) in &c.0 {
            bc.add(e, x);
        }
        let mut ab_ac = a.mul(&b);
        for (&e, &x) in &a.mul(&c).0 {
            ab_ac.add(e, x);
        }
        prop_assert_eq!(a.mul(&bc), ab_ac);
    }

    #[test]
    fn random_braids_satisfy_khovanov_invariants((strands, word) in (2usize..=3).prop_flat_map(|s| (Just(s), braid_word(s, 4)))) {
        let d = from_pd_json(&braid_closure(strands, &word).unwrap()).unwrap();
        let kf = khovanov_functor(&d).unwrap();
        prop_assert!(validate_functor(&kf.functor).passed());
        let c = ckh(&kf).unwrap();
        prop_assert!(c.check_d_squared().unwrap());
        let q = homology(&c, Coefficients::Q).unwrap();
        prop_assert_eq!(homology_euler(&q), state_sum(&d).unwrap());
        let z = homology(&c, Coefficients::Z).unwrap();
        for (k, g) in &z {
            prop_assert_eq!(q.get(k).map_or(0, |h| h.rank), g.rank);
        }
    }

    #[test]
    fn permutation_module_resolutions_exact(m in 2usize..=4, dim in 1usize..=4, seed in any::<u64>()) {
        // a Z/m-set given by an element of order dividing m
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..dim).collect();
        perm.shuffle(&mut rng);
        let cycle = (1..=dim).filter(|k| m % k == 0).max().unwrap();
        let mut img: Vec<usize> = (0..dim).collect();
        for chunk in perm.chunks(cycle).filter(|c| c.len() == cycle) {
            for (k, &x) in chunk.iter().enumerate() {
                img[x] = chunk[(k + 1) % cycle];
            }
        }
        let rows: Vec<Vec<bool>> = (0..dim).map(|r| (0..dim).map(|c| img[c] == r).collect()).collect();
        let module = GroupModule::new(m, F2Matrix::from_rows(&rows, dim));
        prop_assume!(module.is_ok());
        let res = module_resolution(&module.unwrap(), 4).unwrap();
        let r = res.verify();
        prop_assert!(r.passed(), "{:?}", r.violations);
    }

    #[test]
    fn relabeled_round_trips(pick in 0usize..1000, seed in any::<u64>()) {
        let subjects = generated_subjects(&[2, 3]).unwrap();
        let s = &subjects[pick % subjects.len()];
        let (f, phi, _) = s.materialize().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = roundtrip_report(&f, &phi, &mut rng).unwrap();
        prop_assert!(r.passed(), "{}: {:?}", s.name(), r.violations);
    }

    #[test]
    fn periodic_braids_realize(m in 2usize..=3, block in braid_word(3, 2)) {
        prop_assume!(block.len() * m <= 4 || (m == 3 && block.len() == 1));
        let word: Vec<i32> = block.iter().copied().cycle().take(block.len() * m).collect();
        let p = PeriodicDiagram::from_json(&periodic_braid(3, &word, m).unwrap()).unwrap();
        prop_assert!(validate_periodic(&p).report.passed());
        let kf = khovanov_functor(&p.diagram).unwrap();
        let phi = induced_action(&p, &kf).unwrap();
        prop_assert!(validate_musyt(&kf.functor, &phi).passed());
        prop_assert!(validate_sz(&kf.functor, &musyt_to_sz(&kf.functor, &phi).unwrap()).passed());
        let (a, b) = both_routes(&kf.functor, &phi, 0).unwrap();
        prop_assert!(compare_realizations(&a, &b).unwrap().is_iso());
    }
}
