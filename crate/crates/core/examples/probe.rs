use divorb::arith;
use divorb::cfe::{averaged_nu, cfe_of_rational, ks_distance, nu_pq, Rational, UnitIntervalMeasure};

fn main() {
    println!("== averaged (1/phi) sum nu_p/q ==");
    for q in [101u64, 1009, 10007] {
        let mu = averaged_nu(q).unwrap();
        println!("q = {q}: KS = {:.6}", ks_distance(&mu));
    }
    println!("== orbit-length weighted: equal weight per (p, i) pair ==");
    for q in [101u64, 1009, 10007] {
        let mut points = Vec::new();
        for p in arith::units(q) {
            let x = Rational::from_u64(p, q).unwrap();
            let nu = nu_pq(&x).unwrap();
            let len = cfe_of_rational(&x).unwrap().len() as f64;
            for (r, w) in nu.points() {
                points.push((r.clone(), w * len));
            }
        }
        let total: f64 = points.iter().map(|(_, w)| *w).sum();
        let pts = points.into_iter().map(|(r, w)| (r, w / total)).collect();
        let mu = UnitIntervalMeasure::from_weighted(pts);
        println!("q = {q}: KS = {:.6}", ks_distance(&mu));
    }
    println!("== log-derivative weighted (geodesic time): weight -ln(x_i)-ish ==");
    for q in [101u64, 1009, 10007] {
        let mut points = Vec::new();
        for p in arith::units(q) {
            let x = Rational::from_u64(p, q).unwrap();
            let nu = nu_pq(&x).unwrap();
            for (r, _) in nu.points() {
                let v = r.to_f64();
                points.push((r.clone(), -(v.ln())));
            }
        }
        let total: f64 = points.iter().map(|(_, w)| *w).sum();
        let pts = points.into_iter().map(|(r, w)| (r, w / total)).collect();
        let mu = UnitIntervalMeasure::from_weighted(pts);
        println!("q = {q}: KS = {:.6}", ks_distance(&mu));
    }
}
