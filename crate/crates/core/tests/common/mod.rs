#![allow(dead_code)]

use rand::Rng;

use isa_core::{AtomTag, Expr, ExprBuilder, IntervalBox};

/// Random factorable expression over `n_vars` variables with at most
/// `depth` levels of operations.
pub fn random_expr<R: Rng>(rng: &mut R, n_vars: usize, depth: usize) -> Expr {
    let mut b = ExprBuilder::new(n_vars);
    let root = random_node(rng, &mut b, n_vars, depth);
    b.finish(vec![root]).expect("generated expressions are well formed")
}

fn random_node<R: Rng>(rng: &mut R, b: &mut ExprBuilder, n_vars: usize, depth: usize) -> usize {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.8) {
            b.var(rng.gen_range(0..n_vars))
        } else {
            b.num(rng.gen_range(-3.0..3.0))
        };
    }
    match rng.gen_range(0..9) {
        0 => {
            let l = random_node(rng, b, n_vars, depth - 1);
            let r = random_node(rng, b, n_vars, depth - 1);
            b.add(l, r)
        }
        1 => {
            let l = random_node(rng, b, n_vars, depth - 1);
            let r = random_node(rng, b, n_vars, depth - 1);
            b.sub(l, r)
        }
        2 | 3 => {
            let l = random_node(rng, b, n_vars, depth - 1);
            let r = random_node(rng, b, n_vars, depth - 1);
            b.mul(l, r)
        }
        4 => {
            let l = random_node(rng, b, n_vars, depth - 1);
            let r = random_node(rng, b, n_vars, depth - 1);
            b.div(l, r)
        }
        5 => {
            let u = random_node(rng, b, n_vars, depth - 1);
            b.neg(u)
        }
        6 => {
            let u = random_node(rng, b, n_vars, depth - 1);
            b.pow(u, rng.gen_range(-2..=4))
        }
        _ => {
            let u = random_node(rng, b, n_vars, depth - 1);
            let tag = AtomTag::ALL[rng.gen_range(0..AtomTag::ALL.len())];
            b.atom(tag, u)
        }
    }
}

/// Random box with components inside `[-3, 3]` of width at least 0.01.
pub fn random_box<R: Rng>(rng: &mut R, n: usize) -> IntervalBox {
    let bounds: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let lo = rng.gen_range(-3.0..2.9);
            let hi = rng.gen_range(lo + 0.01..=3.0);
            (lo, hi)
        })
        .collect();
    IntervalBox::from_bounds(&bounds).unwrap()
}

pub fn random_point<R: Rng>(rng: &mut R, b: &IntervalBox) -> Vec<f64> {
    b.iter().map(|c| rng.gen_range(c.lo()..=c.hi())).collect()
}
