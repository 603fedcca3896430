//! The JSON exports, run natively.

use amli_wasm::{cbs_curves_json, local_spectrum_json, solve_history_json};

#[test]
fn curves_stay_below_bound_and_decrease() {
    for dim in [2, 3] {
        let v = cbs_curves_json(dim, -6, 2, 8).unwrap();
        let bound = v["bound"].as_f64().unwrap();
        let curves = v["curves"].as_array().unwrap();
        assert_eq!(curves.len(), 9);
        for c in curves {
            let c2: Vec<f64> = c["c2"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
            assert_eq!(c2.len(), 9);
            assert!(c2.iter().all(|&x| x < bound));
            assert!(c2.windows(2).all(|w| w[1] < w[0]));
        }
    }
}

#[test]
fn spectrum_multiplicities_and_closed_form() {
    for (dim, n_coarse) in [(2, 4), (3, 6)] {
        let v = local_spectrum_json(dim, 1e-2).unwrap();
        let ev: Vec<f64> = v["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(ev.len(), n_coarse);
        let lambda = v["lambda_min"].as_f64().unwrap();
        assert!((ev[0] - lambda).abs() < 1e-10);
        // two distinct eigenvalues, each with multiplicity n_coarse / 2
        let ones = ev.iter().filter(|&&x| (x - 1.0).abs() < 1e-10).count();
        let mins = ev.iter().filter(|&&x| (x - lambda).abs() < 1e-10).count();
        assert_eq!((ones, mins), (n_coarse / 2, n_coarse / 2));
        assert!(v["cond_b11"].as_f64().unwrap() >= v["cond_b11_ilu"].as_f64().unwrap());
    }
}

#[test]
fn history_is_relative_and_converges() {
    let v = solve_history_json(2, 32, 1.0, 1.0, "nonlinear", "w").unwrap();
    let res: Vec<f64> = v["residuals"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(res[0], 1.0);
    assert!(*res.last().unwrap() <= 1e-8);
    assert_eq!(res.len(), v["n_it"].as_u64().unwrap() as usize + 1);
    assert!(v["converged"].as_bool().unwrap());
}

#[test]
fn bad_inputs_are_errors() {
    assert!(cbs_curves_json(4, 0, 1, 3).is_err());
    assert!(local_spectrum_json(2, -1.0).is_err());
    assert!(solve_history_json(3, 64, 1.0, 1.0, "t", "v").is_err());
    assert!(solve_history_json(2, 24, 1.0, 1.0, "t", "v").is_err());
    assert!(solve_history_json(2, 16, 1.0, 1.0, "q", "v").is_err());
}
