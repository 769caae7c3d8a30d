//! Property-based tests for the expression grammar, dual numbers and the
//! exterior algebra kernels.

use piola_core::expr::Expr;
use piola_core::exterior::{hodge_star, wedge, KVector, Space};
use piola_core::linalg::Mat;
use piola_core::scalar::{Dual, Scalar};
use proptest::prelude::*;

const DIM: usize = 3;

fn arb_expr() -> impl Strategy<Value = Expr> {
    // constants are non-negative so unparse∘parse is structurally the
    // identity (a negative literal reparses as Neg(Const)); negation is
    // covered by the Neg node
    let leaf = prop_oneof![
        (0.0..4.0f64).prop_map(Expr::Const),
        (0..DIM).prop_map(Expr::Var),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (inner.clone(), 1..4i32).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
            inner.clone().prop_map(|a| Expr::Sin(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Cos(Box::new(a))),
        ]
    })
}

proptest! {
    /// Unparsing an AST and parsing it back is the identity.
    #[test]
    fn parse_unparse_roundtrip(e in arb_expr()) {
        let text = e.to_string();
        let back = Expr::parse(&text, DIM).expect("unparsed text parses");
        prop_assert_eq!(back, e);
    }

    /// Mixed symbolic partials commute when evaluated.
    #[test]
    fn mixed_partials_commute(
        e in arb_expr(),
        p in prop::array::uniform3(-1.0..1.0f64),
        i in 0..DIM,
        j in 0..DIM,
    ) {
        let a = e.diff(i).diff(j).eval(&p);
        let b = e.diff(j).diff(i).eval(&p);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    /// Symbolic derivative agrees with dual-number propagation.
    #[test]
    fn symbolic_matches_dual(
        e in arb_expr(),
        p in prop::array::uniform3(-1.0..1.0f64),
        i in 0..DIM,
    ) {
        let sym = e.diff(i).eval(&p);
        let pd: Vec<_> = p
            .iter()
            .enumerate()
            .map(|(k, &x)| Dual::new(x, if k == i { 1.0 } else { 0.0 }))
            .collect();
        let dual = e.eval_s(&pd);
        if let (Ok(sym), Ok(dual)) = (sym, dual) {
            prop_assert!((sym - dual.der).abs() <= 1e-9 * (1.0 + sym.abs()));
        }
    }

    /// Wedge of 1-vectors is antisymmetric.
    #[test]
    fn wedge_antisymmetry(
        a in prop::array::uniform3(-2.0..2.0f64),
        b in prop::array::uniform3(-2.0..2.0f64),
    ) {
        let va = KVector::new(3, 1, a.to_vec());
        let vb = KVector::new(3, 1, b.to_vec());
        let ab = wedge(&va, &vb).unwrap();
        let ba = wedge(&vb, &va).unwrap();
        for (x, y) in ab.coeffs.iter().zip(&ba.coeffs) {
            prop_assert!((x + y).abs() < 1e-12);
        }
    }

    /// The Hodge star is an isometry: ⟨⋆α, ⋆α⟩ = ⟨α, α⟩ on 1-vectors,
    /// for random well-conditioned Grams and either orientation.
    #[test]
    fn hodge_star_is_isometry(
        a in prop::array::uniform3(-2.0..2.0f64),
        perturb in prop::array::uniform3(-0.3..0.3f64),
        orientation in prop_oneof![Just(1i8), Just(-1i8)],
    ) {
        let mut gram = Mat::<f64>::identity(3).scale(1.5);
        for i in 0..3 {
            let j = (i + 1) % 3;
            gram[(i, j)] += perturb[i];
            gram[(j, i)] = gram[(i, j)];
        }
        let space = Space::new(3, gram, orientation).unwrap();
        let v = KVector::new(3, 1, a.to_vec());
        let sv = hodge_star(&space, &v);

        // inner product on degree-2 coefficients via the Gram of wedge pairs
        let idx = [[0usize, 1], [0, 2], [1, 2]];
        let mut norm2_star = 0.0;
        for (r, ir) in idx.iter().enumerate() {
            for (c, ic) in idx.iter().enumerate() {
                let g = |x: usize, y: usize| space.gram[(x, y)];
                let det = g(ir[0], ic[0]) * g(ir[1], ic[1]) - g(ir[0], ic[1]) * g(ir[1], ic[0]);
                norm2_star += sv.coeffs[r] * sv.coeffs[c] * det;
            }
        }
        let norm2 = space.inner(&a, &a);
        prop_assert!((norm2_star - norm2).abs() <= 1e-9 * (1.0 + norm2.abs()));
    }

    /// Nested duals produce correct second derivatives of powers.
    #[test]
    fn nested_duals_second_derivative(x in 0.2..3.0f64, n in 2..5i32) {
        // f(x) = x^n: f''(x) = n(n-1)x^(n-2)
        let inner = Dual::new(x, 1.0);
        let xx = Dual::new(inner, Dual::constant(1.0));
        let y = xx.powi(n);
        let expect = n as f64 * (n - 1) as f64 * x.powi(n - 2);
        prop_assert!((y.der.der - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
    }
}
