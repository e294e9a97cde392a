//! Channel-based Dyson series.
//!
//! Each interaction slot multiplies the running operator by `−iχJ` from the
//! left or `+iχJ` from the right and inserts one field factor. In the
//! displaced frame the field factor is either the c-number drive (a *kick
//! insertion*) or a vacuum operator. Vacuum operators are contracted in
//! pairs (Wick), and a pair's value depends only on the mode, the side of
//! the earlier slot and the two times:
//!
//! ```text
//! earlier slot on the left:  conj(g_n) e^{iω s} · g_n' e^{−iω t}
//! earlier slot on the right: g_n e^{−iω s} · conj(g_n') e^{iω t}
//! ```
//!
//! so an uncontracted slot is carried as an open *channel* `(side, n)` and
//! closed by a later slot. A term of total order `k` in a series truncated
//! at `K` never needs more than `min(k, K − k)` open channels.
//!
//! Nested time integrals are cumulative trapezoid sums on one uniform grid,
//! swept once. Each entry is Richardson-extrapolated from `2n` and `4n`
//! steps; its error bar is the change from the `(n, 2n)` extrapolation.

use std::collections::{BTreeMap, HashMap};

use cdl_detector::{detector_form_factor, DetectorSpec};
use num_complex::Complex64 as C;

use crate::series::{PerturbativeSeries, SeriesEntry, SeriesKey};
use crate::{PerturbationError, Scenario};

const ZERO: C = C::new(0.0, 0.0);
const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Highest total detector order `Σ n_d` (at most 4).
    pub max_order: usize,
    /// Highest number of kick insertions kept.
    pub max_kick_order: usize,
    /// Time steps of the coarse pass; `None` uses the scenario resolution.
    pub steps: Option<usize>,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { max_order: MAX_ORDER, max_kick_order: MAX_ORDER, steps: None }
    }
}

/// Detector data the sweep needs at every time step.
pub(crate) struct Coupled<'a> {
    pub spec: &'a DetectorSpec,
    pub g: Vec<C>,
    /// `β_n g_n` on the classical mode set for a unit kick.
    pub drive: Vec<C>,
}

pub(crate) struct Setup<'a> {
    pub detectors: Vec<Coupled<'a>>,
    pub omega: Vec<f64>,
    pub omega_cl: Vec<f64>,
    pub window: (f64, f64),
}

impl Coupled<'_> {
    /// Unit-strength classical drive `2 Re Σ β_n g_n e^{−iω_n t}`.
    pub fn drive_at(&self, omega_cl: &[f64], t: f64) -> f64 {
        let s: C = self.drive.iter().zip(omega_cl).map(|(a, w)| a * C::from_polar(1.0, -w * t)).sum();
        2.0 * s.re
    }
}

impl<'a> Setup<'a> {
    pub fn new(scen: &'a Scenario, detectors: &[&'a DetectorSpec]) -> Result<Self, PerturbationError> {
        let order = scen.resolution.quad_order;
        let cl_spec = scen.classical_field_spec();
        let beta = match &scen.kick {
            Some(k) => {
                let unit = cdl_field::Kick { profile: k.profile.clone(), lambda: 1.0 };
                unit.amplitudes(&cl_spec, order)?
            }
            None => vec![ZERO; cl_spec.mode_count()],
        };
        let detectors = detectors
            .iter()
            .map(|&spec| {
                let g = detector_form_factor(spec, &scen.field, order, 2)?.coupling;
                let g_cl = detector_form_factor(spec, &cl_spec, order, 2)?.coupling;
                let drive = beta.iter().zip(&g_cl).map(|(b, g)| b * g).collect();
                Ok(Coupled { spec, g, drive })
            })
            .collect::<Result<Vec<_>, PerturbationError>>()?;
        Ok(Self {
            detectors,
            omega: scen.field.modes().iter().map(|m| m.omega).collect(),
            omega_cl: cl_spec.modes().iter().map(|m| m.omega).collect(),
            window: scen.window,
        })
    }
}

/// Series of the joint detector state in powers of the couplings and of the
/// kick strength, for all detectors of the scenario in their listed order.
pub fn dyson_series(scen: &Scenario, opts: &SeriesOptions) -> Result<PerturbativeSeries, PerturbationError> {
    scen.validate()?;
    if opts.max_order > MAX_ORDER {
        return Err(PerturbationError::InvalidScenario(format!(
            "series order {} exceeds the supported maximum {MAX_ORDER}",
            opts.max_order
        )));
    }
    if scen.detectors.is_empty() {
        return Err(PerturbationError::InvalidScenario("no detectors".into()));
    }
    let dets: Vec<&DetectorSpec> = scen.detectors.iter().collect();
    let setup = Setup::new(scen, &dets)?;
    let steps = opts.steps.unwrap_or(scen.resolution.steps);
    let layout = Layout::new(dets.len(), setup.omega.len(), opts.max_order, opts.max_kick_order.min(opts.max_order));
    let grids: Vec<_> = [1, 2, 4].iter().map(|f| sweep(&setup, &layout, f * steps)).collect();
    let mut entries = BTreeMap::new();
    for (i, key) in layout.keys.iter().enumerate() {
        let (Some(a), Some(b), Some(c)) = (&grids[0][i], &grids[1][i], &grids[2][i]) else { continue };
        let coarse = richardson(a, b);
        let matrix = richardson(b, c);
        let error = coarse.iter().zip(&matrix).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        entries.insert(*key, SeriesEntry { matrix, error });
    }
    Ok(PerturbativeSeries {
        labels: dets.iter().map(|d| d.label).collect(),
        dim: layout.dim,
        entries,
        max_order: opts.max_order,
        max_kick_order: layout.max_kick,
        steps,
    })
}

/// Trapezoid values on `n` and `2n` steps combined to cancel the `dt²` term.
fn richardson(coarse: &[C], fine: &[C]) -> Vec<C> {
    coarse.iter().zip(fine).map(|(a, b)| (4.0 * b - a) / 3.0).collect()
}

struct Layout {
    q: usize,
    dim: usize,
    modes: usize,
    max_order: usize,
    max_kick: usize,
    keys: Vec<SeriesKey>,
    index: HashMap<SeriesKey, usize>,
}

impl Layout {
    fn new(q: usize, modes: usize, max_order: usize, max_kick: usize) -> Self {
        let mut keys = Vec::new();
        let mut orders = vec![0u8; q];
        loop {
            let k: usize = orders.iter().map(|&o| o as usize).sum();
            if k <= max_order {
                for f in 0..=max_kick.min(k) {
                    let key = SeriesKey::new(&orders, f as u8);
                    if (0..=2).any(|c| channels_allowed(key, c, max_order)) {
                        keys.push(key);
                    }
                }
            }
            // odometer over detector orders
            let mut i = 0;
            loop {
                if i == q {
                    keys.sort_by_key(|k| (k.order(), *k));
                    let index = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
                    return Self { q, dim: 1 << q, modes, max_order, max_kick, keys, index };
                }
                orders[i] += 1;
                if orders[i] as usize <= max_order {
                    break;
                }
                orders[i] = 0;
                i += 1;
            }
        }
    }

    fn allowed(&self, key: SeriesKey, c: usize) -> bool {
        channels_allowed(key, c, self.max_order)
    }
}

/// `c` open channels, `f` kick insertions and `p` closed pairs satisfy
/// `k = c + f + 2p`; channels must all close within the remaining `K − k`
/// slots.
fn channels_allowed(key: SeriesKey, c: usize, max_order: usize) -> bool {
    let k = key.order();
    let f = key.kick as usize;
    c <= 2 && f + c <= k && (k - f - c).is_multiple_of(2) && c <= max_order - k
}

/// Operator-valued components of one series key, indexed by channel count.
type Parts = [Option<Vec<C>>; 3];

fn zero_parts(layout: &Layout, key: SeriesKey) -> Parts {
    let d2 = layout.dim * layout.dim;
    let c1 = 2 * layout.modes;
    let size = [d2, c1 * d2, c1 * c1 * d2];
    std::array::from_fn(|c| layout.allowed(key, c).then(|| vec![ZERO; size[c]]))
}

/// Per-time data of one active detector.
struct Slot {
    chi: f64,
    j: Vec<C>,
    drive: f64,
    opener: Vec<C>,
    closer: Vec<C>,
}

fn sweep(setup: &Setup, layout: &Layout, steps: usize) -> Vec<Option<Vec<C>>> {
    let (t0, t1) = setup.window;
    let dt = (t1 - t0) / steps as f64;
    let d2 = layout.dim * layout.dim;
    let mut z: Vec<Parts> = layout.keys.iter().map(|&k| zero_parts(layout, k)).collect();
    let mut g: Vec<Parts> = z.clone();
    if let Some(z0) = z[0][0].as_mut() {
        z0.copy_from_slice(&initial_state(setup));
    }
    let mut scratch = Scratch::new(layout);
    for i in 0..=steps {
        let t = t0 + i as f64 * dt;
        let slots: Vec<Option<Slot>> =
            setup.detectors.iter().enumerate().map(|(idx, d)| slot_at(d, idx, setup, layout, t)).collect();
        for k in 1..=layout.max_order {
            for (key, parts) in layout.keys.iter().zip(g.iter_mut()) {
                if key.order() == k {
                    parts.iter_mut().flatten().for_each(|v| v.fill(ZERO));
                }
            }
            for (si, src) in layout.keys.iter().enumerate() {
                if src.order() + 1 != k {
                    continue;
                }
                for (d, slot) in slots.iter().enumerate() {
                    let Some(slot) = slot else { continue };
                    insert(layout, &z[si], *src, d, slot, &mut g, &mut scratch);
                }
            }
            if i > 0 {
                for (key, (zp, gp)) in layout.keys.iter().zip(z.iter_mut().zip(&g)) {
                    if key.order() == k {
                        axpy_parts(zp, gp, 0.5 * dt);
                    }
                }
            }
        }
        if i < steps {
            for (key, (zp, gp)) in layout.keys.iter().zip(z.iter_mut().zip(&g)) {
                if key.order() >= 1 {
                    axpy_parts(zp, gp, 0.5 * dt);
                }
            }
        }
    }
    debug_assert!(z.iter().all(|p| p[0].as_ref().is_none_or(|v| v.len() == d2)));
    z.into_iter().map(|[z0, _, _]| z0).collect()
}

fn axpy_parts(z: &mut Parts, g: &Parts, a: f64) {
    for (zc, gc) in z.iter_mut().zip(g) {
        if let (Some(zc), Some(gc)) = (zc, gc) {
            zc.iter_mut().zip(gc).for_each(|(z, g)| *z += g * a);
        }
    }
}

fn initial_state(setup: &Setup) -> Vec<C> {
    let mut rho = vec![C::new(1.0, 0.0)];
    for d in &setup.detectors {
        let r = &d.spec.initial_state.0;
        let n = (rho.len() as f64).sqrt() as usize;
        let mut out = vec![ZERO; 4 * n * n];
        for (a, b) in (0..n).flat_map(|a| (0..n).map(move |b| (a, b))) {
            for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                out[(2 * a + x) * 2 * n + 2 * b + y] = rho[a * n + b] * r[x][y];
            }
        }
        rho = out;
    }
    rho
}

fn slot_at(d: &Coupled, idx: usize, setup: &Setup, layout: &Layout, t: f64) -> Option<Slot> {
    let chi = d.spec.smearing.chi(t);
    if chi == 0.0 {
        return None;
    }
    let j = embed(&d.spec.current_at(t).0, idx, layout.q);
    let m = layout.modes;
    let mut opener = vec![ZERO; 2 * m];
    let mut closer = vec![ZERO; 2 * m];
    for (n, (g, w)) in d.g.iter().zip(&setup.omega).enumerate() {
        let e = C::from_polar(1.0, -w * t);
        let right = g * e;
        let left = right.conj();
        opener[n] = left;
        opener[m + n] = right;
        closer[n] = right;
        closer[m + n] = left;
    }
    Some(Slot { chi, j, drive: d.drive_at(&setup.omega_cl, t), opener, closer })
}

/// Qubit `idx` is the `idx`-th most significant bit of the basis index.
fn embed(op: &[[C; 2]; 2], idx: usize, q: usize) -> Vec<C> {
    let dim = 1 << q;
    let shift = q - 1 - idx;
    let mut out = vec![ZERO; dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            if (a ^ b) & !(1 << shift) == 0 {
                out[a * dim + b] = op[(a >> shift) & 1][(b >> shift) & 1];
            }
        }
    }
    out
}

struct Scratch {
    left: Vec<C>,
    right: Vec<C>,
    w: Vec<C>,
}

impl Scratch {
    fn new(layout: &Layout) -> Self {
        let d2 = layout.dim * layout.dim;
        let c1 = 2 * layout.modes;
        Self { left: vec![ZERO; c1 * d2], right: vec![ZERO; c1 * d2], w: vec![ZERO; c1 * d2] }
    }
}

/// `out += s · a·b` for `n×n` matrices.
fn gemm_acc(a: &[C], b: &[C], out: &mut [C], n: usize, s: C) {
    for r in 0..n {
        for k in 0..n {
            let x = a[r * n + k];
            if x == ZERO {
                continue;
            }
            let x = x * s;
            for c in 0..n {
                out[r * n + c] += x * b[k * n + c];
            }
        }
    }
}

/// `out += −iχ [J, X]`.
fn commutator_acc(j: &[C], x: &[C], out: &mut [C], n: usize, chi: f64) {
    gemm_acc(j, x, out, n, C::new(0.0, -chi));
    gemm_acc(x, j, out, n, C::new(0.0, chi));
}

/// Adds the contributions of one slot of detector `d` applied to the
/// components of `src` into the integrands of the keys one order higher.
fn insert(layout: &Layout, src_parts: &Parts, src: SeriesKey, d: usize, slot: &Slot, g: &mut [Parts], s: &mut Scratch) {
    let n = layout.dim;
    let d2 = n * n;
    let c1 = 2 * layout.modes;
    let m = layout.modes;
    let quantum = src.raised(d, 0).and_then(|k| layout.index.get(&k).copied());
    let kicked = (src.kick as usize) < layout.max_kick;
    let classical = if kicked { src.raised(d, 1).and_then(|k| layout.index.get(&k).copied()) } else { None };
    let (yl, yr) = (C::new(0.0, -slot.chi), C::new(0.0, slot.chi));

    // kick insertion: same channel content, one more classical factor
    if let Some(dst) = classical {
        let dst_key = layout.keys[dst];
        for c in 0..3 {
            if let (Some(x), true) = (&src_parts[c], layout.allowed(dst_key, c)) {
                let out = g[dst][c].as_mut().expect("allocated");
                for (xb, ob) in x.chunks_exact(d2).zip(out.chunks_exact_mut(d2)) {
                    commutator_acc(&slot.j, xb, ob, n, slot.chi * slot.drive);
                }
            }
        }
    }
    let Some(dst) = quantum else { return };
    let dst_key = layout.keys[dst];

    // 0 → 1: open
    if let (Some(x), true) = (&src_parts[0], layout.allowed(dst_key, 1)) {
        let (l, r) = (&mut s.left[..d2], &mut s.right[..d2]);
        l.fill(ZERO);
        r.fill(ZERO);
        gemm_acc(&slot.j, x, l, n, yl);
        gemm_acc(x, &slot.j, r, n, yr);
        let out = g[dst][1].as_mut().expect("allocated");
        for (c, ob) in out.chunks_exact_mut(d2).enumerate() {
            let y = if c < m { &*l } else { &*r };
            let o = slot.opener[c];
            ob.iter_mut().zip(y).for_each(|(ov, yv)| *ov += o * yv);
        }
    }
    // 1 → 0: close
    if let (Some(x), true) = (&src_parts[1], layout.allowed(dst_key, 0)) {
        let w = &mut s.w[..d2];
        w.fill(ZERO);
        for (xb, cl) in x.chunks_exact(d2).zip(&slot.closer) {
            w.iter_mut().zip(xb).for_each(|(wv, xv)| *wv += cl * xv);
        }
        commutator_acc(&slot.j, w, g[dst][0].as_mut().expect("allocated"), n, slot.chi);
    }
    // 1 → 2: open a second channel (new channel is the inner index)
    if let (Some(x), true) = (&src_parts[1], layout.allowed(dst_key, 2)) {
        s.left.fill(ZERO);
        s.right.fill(ZERO);
        for ((xb, lb), rb) in x.chunks_exact(d2).zip(s.left.chunks_exact_mut(d2)).zip(s.right.chunks_exact_mut(d2)) {
            gemm_acc(&slot.j, xb, lb, n, yl);
            gemm_acc(xb, &slot.j, rb, n, yr);
        }
        let out = g[dst][2].as_mut().expect("allocated");
        for (c_old, row) in out.chunks_exact_mut(c1 * d2).enumerate() {
            let lb = &s.left[c_old * d2..(c_old + 1) * d2];
            let rb = &s.right[c_old * d2..(c_old + 1) * d2];
            for (c_new, ob) in row.chunks_exact_mut(d2).enumerate() {
                let y = if c_new < m { lb } else { rb };
                let o = slot.opener[c_new];
                ob.iter_mut().zip(y).for_each(|(ov, yv)| *ov += o * yv);
            }
        }
    }
    // 2 → 1: close either channel
    if let (Some(x), true) = (&src_parts[2], layout.allowed(dst_key, 1)) {
        let w = &mut s.w;
        w.fill(ZERO);
        for (c_old, row) in x.chunks_exact(c1 * d2).enumerate() {
            let cl_old = slot.closer[c_old];
            let (before, rest) = w.split_at_mut(c_old * d2);
            let (w_old, after) = rest.split_at_mut(d2);
            for (c_new, xb) in row.chunks_exact(d2).enumerate() {
                let cl_new = slot.closer[c_new];
                // closing the old channel leaves the new one open, and vice versa
                let w_new = match c_new.cmp(&c_old) {
                    std::cmp::Ordering::Less => &mut before[c_new * d2..(c_new + 1) * d2],
                    std::cmp::Ordering::Greater => {
                        let o = (c_new - c_old - 1) * d2;
                        &mut after[o..o + d2]
                    }
                    std::cmp::Ordering::Equal => {
                        for (wv, xv) in w_old.iter_mut().zip(xb) {
                            *wv += (cl_old + cl_new) * xv;
                        }
                        continue;
                    }
                };
                for (wv, xv) in w_new.iter_mut().zip(xb) {
                    *wv += cl_old * xv;
                }
                for (wv, xv) in w_old.iter_mut().zip(xb) {
                    *wv += cl_new * xv;
                }
            }
        }
        let out = g[dst][1].as_mut().expect("allocated");
        for (wb, ob) in s.w.chunks_exact(d2).zip(out.chunks_exact_mut(d2)) {
            commutator_acc(&slot.j, wb, ob, n, slot.chi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_bookkeeping() {
        let k = |o: &[u8], f| SeriesKey::new(o, f);
        assert!(channels_allowed(k(&[1], 0), 1, 4));
        assert!(!channels_allowed(k(&[1], 0), 0, 4));
        assert!(channels_allowed(k(&[2], 0), 2, 4));
        assert!(!channels_allowed(k(&[2], 0), 2, 3));
        assert!(channels_allowed(k(&[3], 1), 0, 3));
        assert!(!channels_allowed(k(&[3], 0), 1, 3));
    }

    #[test]
    fn embedding_acts_on_one_qubit() {
        let x = [[ZERO, C::new(1.0, 0.0)], [C::new(1.0, 0.0), ZERO]];
        let e = embed(&x, 0, 2);
        // σx ⊗ 1 maps |00⟩ to |10⟩
        assert_eq!(e[2 * 4], C::new(1.0, 0.0));
        let e = embed(&x, 1, 2);
        assert_eq!(e[4], C::new(1.0, 0.0));
    }
}
