//! Writes the minimal-basis H2 Hamiltonian at 1.4 bohr as a fermion-term
//! file. Integrals are the textbook STO-3G values over the bonding (1) and
//! antibonding (2) orbitals.
//!
//! cargo run -p heff --example h2_integrals > data/h2_sto3g.fermion

use heff::FermionHamiltonian;

fn main() -> heff::Result<()> {
    let n = 2;
    let one_body = [-1.2528, 0.0, 0.0, -0.4756];
    let mut two_body = vec![0.0; 16];
    let mut set = |p: usize, q: usize, r: usize, s: usize, v: f64| {
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            two_body[((a * n + b) * n + c) * n + d] = v;
        }
    };
    set(0, 0, 0, 0, 0.6746);
    set(1, 1, 1, 1, 0.6975);
    set(0, 0, 1, 1, 0.6636);
    set(0, 1, 0, 1, 0.1813);
    let h = FermionHamiltonian::from_spatial_integrals(n, &one_body, &two_body, 1.0 / 1.4)?;
    print!("{}", h.to_text());
    Ok(())
}
