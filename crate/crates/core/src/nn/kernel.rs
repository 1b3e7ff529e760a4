//! Dense matrix product for row-major `f64` buffers.
//!
//! Every output entry is accumulated as `((0 + a0*b0) + a1*b1) + ...` in
//! ascending `k` order, with separate multiply and add (never fused). The
//! SIMD paths only vectorize across output columns, so all code paths,
//! including the portable fallback, produce bit-identical results to the
//! textbook triple loop on every platform.

const PORTABLE_MR: usize = 4;
const PORTABLE_NR: usize = 8;

/// `c = a · b` where `a` is `m×k`, `b` is `k×n`, `c` is `m×n`, all row-major.
/// `c` is overwritten.
pub fn gemm(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.fill(0.0);
        return;
    }

    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx512f") {
            // SAFETY: feature presence checked at runtime.
            unsafe { x86::gemm_avx512(m, k, n, a, b, c) };
            return;
        }
        if std::is_x86_feature_detected!("avx") {
            // SAFETY: feature presence checked at runtime.
            unsafe { x86::gemm_avx(m, k, n, a, b, c) };
            return;
        }
    }
    gemm_portable(m, k, n, a, b, c);
}

/// Copies columns `j0..j0+nr` of `b` into a `k×nr` panel, zero-padding past `n`.
fn pack_panel(k: usize, n: usize, b: &[f64], j0: usize, nr: usize, out: &mut [f64]) {
    let width = nr.min(n - j0);
    for p in 0..k {
        let dst = &mut out[p * nr..(p + 1) * nr];
        dst[..width].copy_from_slice(&b[p * n + j0..p * n + j0 + width]);
        dst[width..].fill(0.0);
    }
}

fn gemm_portable(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    const MR: usize = PORTABLE_MR;
    const NR: usize = PORTABLE_NR;
    let mut panel = vec![0.0; k * NR];
    for j0 in (0..n).step_by(NR) {
        let width = NR.min(n - j0);
        pack_panel(k, n, b, j0, NR, &mut panel);
        for i0 in (0..m).step_by(MR) {
            let height = MR.min(m - i0);
            let mut acc = [[0.0f64; NR]; MR];
            for p in 0..k {
                let bp = &panel[p * NR..(p + 1) * NR];
                for (ii, row) in acc.iter_mut().enumerate().take(height) {
                    let av = a[(i0 + ii) * k + p];
                    for (slot, &bv) in row.iter_mut().zip(bp) {
                        *slot += av * bv;
                    }
                }
            }
            for (ii, row) in acc.iter().enumerate().take(height) {
                let start = (i0 + ii) * n + j0;
                c[start..start + width].copy_from_slice(&row[..width]);
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod x86 {
    use std::arch::x86_64::*;

    use super::pack_panel;

    #[target_feature(enable = "avx512f")]
    pub(super) unsafe fn gemm_avx512(
        m: usize,
        k: usize,
        n: usize,
        a: &[f64],
        b: &[f64],
        c: &mut [f64],
    ) {
        const MR: usize = 8;
        const NR: usize = 16;
        let mut panel = vec![0.0; k * NR];
        for j0 in (0..n).step_by(NR) {
            let width = NR.min(n - j0);
            pack_panel(k, n, b, j0, NR, &mut panel);
            let pp = panel.as_ptr();
            for i0 in (0..m).step_by(MR) {
                let height = MR.min(m - i0);
                let mut acc = [[_mm512_setzero_pd(); 2]; MR];
                if height == MR {
                    let rows: [*const f64; MR] =
                        std::array::from_fn(|ii| a.as_ptr().add((i0 + ii) * k));
                    for p in 0..k {
                        let b0 = _mm512_loadu_pd(pp.add(p * NR));
                        let b1 = _mm512_loadu_pd(pp.add(p * NR + 8));
                        for ii in 0..MR {
                            let av = _mm512_set1_pd(*rows[ii].add(p));
                            acc[ii][0] = _mm512_add_pd(acc[ii][0], _mm512_mul_pd(av, b0));
                            acc[ii][1] = _mm512_add_pd(acc[ii][1], _mm512_mul_pd(av, b1));
                        }
                    }
                } else {
                    for p in 0..k {
                        let b0 = _mm512_loadu_pd(pp.add(p * NR));
                        let b1 = _mm512_loadu_pd(pp.add(p * NR + 8));
                        for ii in 0..height {
                            let av = _mm512_set1_pd(a[(i0 + ii) * k + p]);
                            acc[ii][0] = _mm512_add_pd(acc[ii][0], _mm512_mul_pd(av, b0));
                            acc[ii][1] = _mm512_add_pd(acc[ii][1], _mm512_mul_pd(av, b1));
                        }
                    }
                }
                let mut tmp = [0.0f64; NR];
                for (ii, row) in acc.iter().enumerate().take(height) {
                    _mm512_storeu_pd(tmp.as_mut_ptr(), row[0]);
                    _mm512_storeu_pd(tmp.as_mut_ptr().add(8), row[1]);
                    let start = (i0 + ii) * n + j0;
                    c[start..start + width].copy_from_slice(&tmp[..width]);
                }
            }
        }
    }

    #[target_feature(enable = "avx")]
    pub(super) unsafe fn gemm_avx(
        m: usize,
        k: usize,
        n: usize,
        a: &[f64],
        b: &[f64],
        c: &mut [f64],
    ) {
        const MR: usize = 6;
        const NR: usize = 8;
        let mut panel = vec![0.0; k * NR];
        for j0 in (0..n).step_by(NR) {
            let width = NR.min(n - j0);
            pack_panel(k, n, b, j0, NR, &mut panel);
            let pp = panel.as_ptr();
            for i0 in (0..m).step_by(MR) {
                let height = MR.min(m - i0);
                let mut acc = [[_mm256_setzero_pd(); 2]; MR];
                if height == MR {
                    let rows: [*const f64; MR] =
                        std::array::from_fn(|ii| a.as_ptr().add((i0 + ii) * k));
                    for p in 0..k {
                        let b0 = _mm256_loadu_pd(pp.add(p * NR));
                        let b1 = _mm256_loadu_pd(pp.add(p * NR + 4));
                        for ii in 0..MR {
                            let av = _mm256_set1_pd(*rows[ii].add(p));
                            acc[ii][0] = _mm256_add_pd(acc[ii][0], _mm256_mul_pd(av, b0));
                            acc[ii][1] = _mm256_add_pd(acc[ii][1], _mm256_mul_pd(av, b1));
                        }
                    }
                } else {
                    for p in 0..k {
                        let b0 = _mm256_loadu_pd(pp.add(p * NR));
                        let b1 = _mm256_loadu_pd(pp.add(p * NR + 4));
                        for ii in 0..height {
                            let av = _mm256_set1_pd(a[(i0 + ii) * k + p]);
                            acc[ii][0] = _mm256_add_pd(acc[ii][0], _mm256_mul_pd(av, b0));
                            acc[ii][1] = _mm256_add_pd(acc[ii][1], _mm256_mul_pd(av, b1));
                        }
                    }
                }
                let mut tmp = [0.0f64; NR];
                for (ii, row) in acc.iter().enumerate().take(height) {
                    _mm256_storeu_pd(tmp.as_mut_ptr(), row[0]);
                    _mm256_storeu_pd(tmp.as_mut_ptr().add(4), row[1]);
                    let start = (i0 + ii) * n + j0;
                    c[start..start + width].copy_from_slice(&tmp[..width]);
                }
            }
        }
    }
}
