//! erfc / erfc_inv against 50-digit reference values (see data/gen_erfc_golden.py).

use pileup_core::special::{erfc, erfc_inv};

fn rows(kind: &'static str) -> impl Iterator<Item = (f64, f64)> {
    include_str!("data/erfc_golden.csv")
        .lines()
        .skip(1)
        .filter_map(move |line| {
            let mut f = line.split(',');
            (f.next()? == kind).then(|| {
                (
                    f.next().unwrap().parse().unwrap(),
                    f.next().unwrap().parse().unwrap(),
                )
            })
        })
}

#[test]
fn erfc_matches_reference() {
    let mut n = 0;
    for (x, want) in rows("erfc") {
        let got = erfc(x);
        assert!(
            ((got - want) / want).abs() <= 1e-14,
            "erfc({x}) = {got:e}, want {want:e}"
        );
        n += 1;
    }
    assert!(n > 600);
}

#[test]
fn erfc_inv_matches_reference() {
    let mut n = 0;
    for (y, want) in rows("erfc_inv") {
        let got = erfc_inv(y).unwrap();
        assert!(
            (got - want).abs() <= 1e-12 * want.abs().max(1e-3),
            "erfc_inv({y:e}) = {got}, want {want}"
        );
        n += 1;
    }
    assert!(n > 800);
}

#[test]
fn erfc_of_inverse_is_identity() {
    for (y, _) in rows("erfc_inv").filter(|(y, _)| (1e-12..=2.0 - 1e-12).contains(y)) {
        let back = erfc(erfc_inv(y).unwrap());
        assert!(((back - y) / y).abs() <= 1e-12, "y = {y:e}: {back:e}");
    }
}
