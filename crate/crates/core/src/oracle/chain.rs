//! Exhaustive enumeration of open Ising chains.

/// `⟨s_k⟩` for `H = -J Σ s_k s_{k+1} - Σ f_k s_k` by summing all `2^K`
/// configurations. Only for short chains.
pub fn chain_magnetization_brute(coupling: f64, fields: &[f64]) -> Vec<f64> {
    let k = fields.len();
    assert!(k <= 24, "brute force limited to short chains");
    let spin = |c: usize, i: usize| if (c >> i) & 1 == 1 { 1.0 } else { -1.0 };
    // Shift energies by the ground-state bound to keep weights finite.
    let bound = coupling.abs() * k as f64 + fields.iter().map(|f| f.abs()).sum::<f64>();
    let mut z = 0.0;
    let mut m = vec![0.0; k];
    for c in 0..(1usize << k) {
        let mut e = 0.0;
        for i in 0..k {
            e += fields[i] * spin(c, i);
            if i + 1 < k {
                e += coupling * spin(c, i) * spin(c, i + 1);
            }
        }
        let w = (e - bound).exp();
        z += w;
        for (i, mi) in m.iter_mut().enumerate() {
            *mi += w * spin(c, i);
        }
    }
    m.iter().map(|v| v / z).collect()
}
