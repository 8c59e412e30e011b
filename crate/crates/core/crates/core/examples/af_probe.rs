fn main() {
    use astro_float::{BigFloat, Consts, RoundingMode};
    let mut cc = Consts::new().unwrap();
    let p = 192usize;
    let rm = RoundingMode::ToEven;
    let x = BigFloat::from_f64(0.25, p);
    let l = x.ln(p, rm, &mut cc);
    let prod = x.mul(&l, p, rm);
    println!("{:?}", prod);
    let back: f64 = {
        // conversion to f64
        let s = format!("{}", prod);
        s.parse::<f64>().unwrap_or(f64::NAN)
    };
    println!("{back}");
}
