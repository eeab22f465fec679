//! Cylinders, convergents and exact Gauss measures.
use cflab::cf::{cf_expand, cylinder, gauss_map, rational, DigitString};

fn main() -> cflab::Result<()> {
    let x = rational(355, 1133);
    let digits = cf_expand(&x)?;
    println!("355/1133 = {digits}");
    println!("T(355/1133) = {}", gauss_map(&x)?);

    for s in [vec![1], vec![1, 1], vec![2], vec![1, 2, 1]] {
        let s = DigitString::new(s)?;
        let c = cylinder(&s);
        let mu = c.measure();
        println!(
            "C_{s}: [{}, {}], width {}, mu = log2({}) = {}",
            c.lo,
            c.hi,
            c.width(),
            mu.ratio(),
            mu.decimal(30)
        );
    }

    // mu(A) and mu(A ∩ T^-1 A) are exact
    let a = cylinder(&DigitString::new(vec![1])?).measure();
    let e1 = cylinder(&DigitString::new(vec![1, 1])?).measure();
    println!("mu(A)   = {a}");
    println!("mu(E_1) = {e1}");
    Ok(())
}
