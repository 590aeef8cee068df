//! Spin-resolved coherent transport through a [`lattice::Device`].
//!
//! Retarded Green's functions are built column by column with the standard
//! recursive (block-tridiagonal) scheme, semi-infinite leads enter through
//! self-energies obtained by decimation, and transmissions come from the
//! trace formula T = Tr[Gamma_R G Gamma_L G+]. Contacts can be restricted
//! to one channel or one spin species; a blocked row simply gets no
//! self-energy, which is the hard-terminated wire.

use rayon::prelude::*;
use thiserror::Error;

use crate::constants::{self, tol};
use crate::lattice::{channel_rows, Device};
use crate::linalg::{self, dagger, eye, CMat, Cx};
use crate::Spin;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NegfError {
    #[error(transparent)]
    Singular(#[from] linalg::SingularMatrix),
    #[error("lead decimation stalled: residual {residual:.3e} after {iterations} rounds")]
    DecimationStalled { residual: f64, iterations: usize },
    #[error("broadening must be positive and finite, got {eta_ev:e}")]
    BadBroadening { eta_ev: f64 },
    #[error("no sign change of theta - target inside the scan window [{lo:e}, {hi:e}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("calibration scan needs at least two points")]
    ScanTooShort,
}

/// Numerical knobs of the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegfParams {
    /// Positive imaginary part of the energy in eV. Keep well below the
    /// smallest feature of interest; it acts as a uniform absorber.
    pub eta_ev: f64,
}

impl Default for NegfParams {
    fn default() -> Self {
        NegfParams { eta_ev: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelFilter {
    Both,
    Only(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinFilter {
    Both,
    Only(Spin),
}

/// What a physical contact accepts; rows outside the filter are
/// hard-terminated (no self-energy, perfect reflection).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContactSpec {
    pub channels: ChannelFilter,
    pub spin: SpinFilter,
}

impl ContactSpec {
    pub const OPEN: ContactSpec = ContactSpec {
        channels: ChannelFilter::Both,
        spin: SpinFilter::Both,
    };

    pub fn port(channel: usize) -> ContactSpec {
        ContactSpec {
            channels: ChannelFilter::Only(channel),
            spin: SpinFilter::Both,
        }
    }

    /// Boolean mask over the 2*ny spinor slots of a boundary column.
    fn mask(&self, width: usize) -> Vec<bool> {
        let ny = 2 * width + 1;
        let mut keep = vec![false; 2 * ny];
        let rows: Vec<usize> = match self.channels {
            ChannelFilter::Both => (0..ny).collect(),
            ChannelFilter::Only(c) => channel_rows(c, width).collect(),
        };
        for y in rows {
            for spin in Spin::BOTH {
                let pass = match self.spin {
                    SpinFilter::Both => true,
                    SpinFilter::Only(s) => s == spin,
                };
                if pass {
                    keep[2 * y + spin.index()] = true;
                }
            }
        }
        keep
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Contacts {
    pub left: ContactSpec,
    pub right: ContactSpec,
}

impl Contacts {
    pub fn open() -> Contacts {
        Contacts {
            left: ContactSpec::OPEN,
            right: ContactSpec::OPEN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

fn zero_outside_mask(m: &mut CMat, keep: &[bool]) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if !keep[r] || !keep[c] {
                m[(r, c)] = Cx::new(0.0, 0.0);
            }
        }
    }
}

enum DecimationFailure {
    /// Retry with more broadening may still succeed.
    Unstable(f64),
}

fn decimation_pass(
    h00: &CMat,
    h_into: &CMat,
    z: Cx,
    scale: f64,
) -> Result<CMat, DecimationFailure> {
    let n = h00.nrows();
    let zi = {
        let mut m = eye(n);
        m.mapv_inplace(|v| v * z);
        m
    };
    let mut eps_s = h00.clone();
    let mut eps = h00.clone();
    let mut alpha = h_into.clone();
    let mut beta = dagger(h_into);
    let mut residual = f64::INFINITY;
    for _ in 0..tol::DECIMATION_MAX_ITER {
        residual = linalg::max_abs(&alpha).max(linalg::max_abs(&beta));
        if residual < tol::DECIMATION_RESIDUAL * scale {
            return linalg::invert(&(&zi - &eps_s))
                .map_err(|_| DecimationFailure::Unstable(residual));
        }
        if !residual.is_finite() || residual > 1e6 * scale {
            // renormalised couplings blew up; the energy sits too close
            // to a singular point of the lead resolvent
            return Err(DecimationFailure::Unstable(residual));
        }
        let g = match linalg::invert(&(&zi - &eps)) {
            Ok(g) => g,
            Err(_) => return Err(DecimationFailure::Unstable(residual)),
        };
        let ag = alpha.dot(&g);
        let bg = beta.dot(&g);
        eps_s = eps_s + ag.dot(&beta);
        eps = eps + ag.dot(&beta) + bg.dot(&alpha);
        let new_alpha = ag.dot(&alpha);
        let new_beta = bg.dot(&beta);
        alpha = new_alpha;
        beta = new_beta;
    }
    Err(DecimationFailure::Unstable(residual))
}

/// Surface Green's function of a semi-infinite block chain by decimation.
/// `h00` is the unit-cell block, `h_into` the hop from the surface cell to
/// the next cell deeper into the lead.
///
/// At energies where the truncated lead resolvent is singular (a band
/// centre, say) the plain recursion is numerically unstable, so failed
/// passes are retried with progressively more broadening. The extra
/// broadening stays at the 1e-9 level of the hopping scale, far below
/// every tolerance used on top of this solver.
pub fn surface_green(h00: &CMat, h_into: &CMat, z: Cx) -> Result<CMat, NegfError> {
    let scale = linalg::max_abs(h_into).max(1e-300);
    let mut eta = z.im;
    for attempt in 0..4 {
        match decimation_pass(h00, h_into, Cx::new(z.re, eta), scale) {
            Ok(g) => return Ok(g),
            Err(DecimationFailure::Unstable(r)) => {
                eta = (eta * 1e3).max(1e-9 * scale);
                if attempt == 3 {
                    return Err(NegfError::DecimationStalled {
                        residual: r,
                        iterations: tol::DECIMATION_MAX_ITER,
                    });
                }
            }
        }
    }
    unreachable!("retry loop always returns");
}

fn check_params(params: &NegfParams) -> Result<(), NegfError> {
    if !(params.eta_ev.is_finite() && params.eta_ev > 0.0) {
        return Err(NegfError::BadBroadening {
            eta_ev: params.eta_ev,
        });
    }
    Ok(())
}

/// Retarded self-energy of one contact, embedded on the matching boundary
/// column and restricted by the contact filter.
pub fn lead_self_energy(
    dev: &Device,
    side: Side,
    contact: ContactSpec,
    e_ev: f64,
    params: &NegfParams,
) -> Result<CMat, NegfError> {
    check_params(params)?;
    let z = Cx::new(e_ev, params.eta_ev);
    let h00 = dev.lead_onsite();
    let v = dev.lead_hop(); // hop one cell to the right
    let mut sigma = match side {
        Side::Left => {
            let g = surface_green(&h00, &dagger(&v), z)?;
            dagger(&v).dot(&g).dot(&v)
        }
        Side::Right => {
            let g = surface_green(&h00, &v, z)?;
            v.dot(&g).dot(&dagger(&v))
        }
    };
    zero_outside_mask(&mut sigma, &contact.mask(dev.channel_width()));
    Ok(sigma)
}

/// Broadening matrix i(Sigma - Sigma+).
pub fn gamma_of(sigma: &CMat) -> CMat {
    let mut g = sigma - &dagger(sigma);
    g.mapv_inplace(|v| Cx::new(0.0, 1.0) * v);
    g
}

/// Green's function blocks linking the two boundary columns at one energy.
#[derive(Debug, Clone)]
pub struct GreensSolution {
    pub e_ev: f64,
    /// G(last column, first column): transmission amplitudes live here.
    pub g_rl: CMat,
    /// G(first column, first column): reflection side.
    pub g_00: CMat,
    pub gamma_l: CMat,
    pub gamma_r: CMat,
}

/// Recursive solve across the device. Cost is one inversion and a few
/// block products per column.
pub fn solve_greens(
    dev: &Device,
    contacts: &Contacts,
    e_ev: f64,
    params: &NegfParams,
) -> Result<GreensSolution, NegfError> {
    check_params(params)?;
    let nx = dev.nx();
    let bd = dev.block_dim();
    let z = Cx::new(e_ev, params.eta_ev);
    let zi = {
        let mut m = eye(bd);
        m.mapv_inplace(|v| v * z);
        m
    };

    let sigma_l = lead_self_energy(dev, Side::Left, contacts.left, e_ev, params)?;
    let sigma_r = lead_self_energy(dev, Side::Right, contacts.right, e_ev, params)?;
    let gamma_l = gamma_of(&sigma_l);
    let gamma_r = gamma_of(&sigma_r);

    // right-connected partial Green's functions s_x, swept from the right
    let mut s: Vec<CMat> = vec![CMat::zeros((0, 0)); nx];
    for x in (0..nx).rev() {
        let mut a = &zi - &dev.onsite_block(x);
        if x == 0 {
            a = a - &sigma_l;
        }
        if x == nx - 1 {
            a = a - &sigma_r;
        }
        if x == nx - 1 {
            s[x] = linalg::invert(&a)?;
        } else {
            let hop = dev.hop_right(x); // H_{x,x+1}
            let coupled = hop.dot(&s[x + 1]).dot(&dagger(&hop));
            s[x] = linalg::invert(&(a - coupled))?;
        }
    }

    // chain outward: G_{x,0} = s_x H+_{x-1,x} G_{x-1,0}
    let g_00 = s[0].clone();
    let mut g_col = g_00.clone();
    for x in 1..nx {
        let hop = dev.hop_right(x - 1);
        g_col = s[x].dot(&dagger(&hop)).dot(&g_col);
    }

    Ok(GreensSolution {
        e_ev,
        g_rl: g_col,
        g_00,
        gamma_l,
        gamma_r,
    })
}

/// Re(Tr[P G+]) for P and G of equal shape.
fn trace_against_dagger(p: &CMat, g: &CMat) -> f64 {
    let mut acc = Cx::new(0.0, 0.0);
    for r in 0..p.nrows() {
        for c in 0..p.ncols() {
            acc += p[(r, c)] * g[(r, c)].conj();
        }
    }
    acc.re
}

/// Total transmission between the two contacts.
pub fn total_transmission(sol: &GreensSolution) -> f64 {
    let p = sol.gamma_r.dot(&sol.g_rl).dot(&sol.gamma_l);
    trace_against_dagger(&p, &sol.g_rl)
}

/// Transmission resolved by injected and collected (port, spin); index is
/// port * 2 + spin with up first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedTransmission {
    pub e_ev: f64,
    /// t[in][out]
    pub t: [[f64; 4]; 4],
}

impl ResolvedTransmission {
    pub fn total(&self) -> f64 {
        self.t.iter().flatten().sum()
    }

    pub fn get(&self, in_port: usize, in_spin: Spin, out_port: usize, out_spin: Spin) -> f64 {
        self.t[in_port * 2 + in_spin.index()][out_port * 2 + out_spin.index()]
    }

    /// Collected at one port, summed over spin, for injection summed over
    /// the given port's spins.
    pub fn port_to_port(&self, in_port: usize, out_port: usize) -> f64 {
        let mut acc = 0.0;
        for si in 0..2 {
            for so in 0..2 {
                acc += self.t[in_port * 2 + si][out_port * 2 + so];
            }
        }
        acc
    }
}

/// Spin- and port-resolved table from one solved energy. Projections act
/// on the broadening matrices; the wall row carries no propagating weight,
/// so the table sums to the total transmission.
pub fn resolved_transmission(dev: &Device, sol: &GreensSolution) -> ResolvedTransmission {
    let width = dev.channel_width();
    let mut masks = Vec::with_capacity(4);
    for port in 0..2 {
        for spin in Spin::BOTH {
            let spec = ContactSpec {
                channels: ChannelFilter::Only(port),
                spin: SpinFilter::Only(spin),
            };
            masks.push(spec.mask(width));
        }
    }
    let mut t = [[0.0; 4]; 4];
    for (i, mask_in) in masks.iter().enumerate() {
        let mut gl = sol.gamma_l.clone();
        zero_outside_mask(&mut gl, mask_in);
        let part = sol.g_rl.dot(&gl);
        for (o, mask_out) in masks.iter().enumerate() {
            let mut gr = sol.gamma_r.clone();
            zero_outside_mask(&mut gr, mask_out);
            t[i][o] = trace_against_dagger(&gr.dot(&part), &sol.g_rl);
        }
    }
    ResolvedTransmission { e_ev: sol.e_ev, t }
}

/// Solve and resolve in one call.
pub fn transmission(
    dev: &Device,
    contacts: &Contacts,
    e_ev: f64,
    params: &NegfParams,
) -> Result<ResolvedTransmission, NegfError> {
    let sol = solve_greens(dev, contacts, e_ev, params)?;
    Ok(resolved_transmission(dev, &sol))
}

/// Parallel sweep over an energy grid.
pub fn transmission_sweep(
    dev: &Device,
    contacts: &Contacts,
    energies_ev: &[f64],
    params: &NegfParams,
) -> Result<Vec<ResolvedTransmission>, NegfError> {
    energies_ev
        .par_iter()
        .map(|&e| transmission(dev, contacts, e, params))
        .collect()
}

/// Transmission solved in the opposite direction: injection from the
/// right lead, collection on the left. The returned table indexes
/// `in_*` over right-lead modes and `out_*` over left-lead modes.
///
/// Runs its own left-connected sweep over the same Hamiltonian, so
/// forward and reverse tables come from independent recursions; their
/// spin-summed port entries must agree by reciprocity.
pub fn reverse_transmission(
    dev: &Device,
    contacts: &Contacts,
    e_ev: f64,
    params: &NegfParams,
) -> Result<ResolvedTransmission, NegfError> {
    check_params(params)?;
    let nx = dev.nx();
    let bd = dev.block_dim();
    let z = Cx::new(e_ev, params.eta_ev);
    let zi = {
        let mut m = eye(bd);
        m.mapv_inplace(|v| v * z);
        m
    };

    let sigma_l = lead_self_energy(dev, Side::Left, contacts.left, e_ev, params)?;
    let sigma_r = lead_self_energy(dev, Side::Right, contacts.right, e_ev, params)?;
    let gamma_l = gamma_of(&sigma_l);
    let gamma_r = gamma_of(&sigma_r);

    // left-connected partial Green's functions, swept from the left
    let mut p: Vec<CMat> = vec![CMat::zeros((0, 0)); nx];
    for x in 0..nx {
        let mut a = &zi - &dev.onsite_block(x);
        if x == 0 {
            a = a - &sigma_l;
        }
        if x == nx - 1 {
            a = a - &sigma_r;
        }
        if x == 0 {
            p[x] = linalg::invert(&a)?;
        } else {
            let hop = dev.hop_right(x - 1); // H_{x-1,x}
            let coupled = dagger(&hop).dot(&p[x - 1]).dot(&hop);
            p[x] = linalg::invert(&(a - coupled))?;
        }
    }

    // chain inward: G_{x,last} = p_x H_{x,x+1} G_{x+1,last}
    let mut g_lr = p[nx - 1].clone();
    for x in (0..nx - 1).rev() {
        let hop = dev.hop_right(x);
        g_lr = p[x].dot(&hop).dot(&g_lr);
    }

    let width = dev.channel_width();
    let mut masks = Vec::with_capacity(4);
    for port in 0..2 {
        for spin in Spin::BOTH {
            let spec = ContactSpec {
                channels: ChannelFilter::Only(port),
                spin: SpinFilter::Only(spin),
            };
            masks.push(spec.mask(width));
        }
    }
    let mut t = [[0.0; 4]; 4];
    for (i, mask_in) in masks.iter().enumerate() {
        let mut gr = gamma_r.clone();
        zero_outside_mask(&mut gr, mask_in);
        let part = g_lr.dot(&gr);
        for (o, mask_out) in masks.iter().enumerate() {
            let mut gl = gamma_l.clone();
            zero_outside_mask(&mut gl, mask_out);
            t[i][o] = trace_against_dagger(&gl.dot(&part), &g_lr);
        }
    }
    Ok(ResolvedTransmission { e_ev, t })
}

/// Scattering amplitude probe: w+ G(last, first) u for unit spinor
/// vectors u (injection column) and w (collection column). Magnitudes are
/// not mode-normalised; use this for relative phases between equivalent
/// paths.
pub fn transmission_amplitude(sol: &GreensSolution, u: &[Cx], w: &[Cx]) -> Cx {
    assert_eq!(u.len(), sol.g_rl.ncols());
    assert_eq!(w.len(), sol.g_rl.nrows());
    let mut acc = Cx::new(0.0, 0.0);
    for r in 0..w.len() {
        for c in 0..u.len() {
            acc += w[r].conj() * sol.g_rl[(r, c)] * u[c];
        }
    }
    acc
}

/// Zero-temperature two-terminal current from a transmission curve
/// sampled on an ascending energy grid spanning the bias window, by the
/// trapezoid rule: I = (e/h) * integral of T dE.
pub fn landauer_current(energies_ev: &[f64], t_values: &[f64]) -> f64 {
    assert_eq!(energies_ev.len(), t_values.len());
    assert!(energies_ev.len() >= 2, "need at least two samples");
    let mut integral_ev = 0.0;
    for i in 1..energies_ev.len() {
        let de = energies_ev[i] - energies_ev[i - 1];
        assert!(de > 0.0, "energy grid must ascend");
        integral_ev += 0.5 * de * (t_values[i] + t_values[i - 1]);
    }
    // (e/h) * dE[J] = G0 * dE[eV] numerically, since 1 eV / e = 1 V
    constants::G0 * integral_ev
}

/// Result of inverting a measured spin-flip curve at one target angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub alpha_evm: f64,
    pub theta_rad: f64,
    pub flip_fraction: f64,
}

/// Find the coupling alpha at which the measured spin-flip fraction
/// f = sin^2(theta/2) corresponds to the requested precession angle.
///
/// The raw angle 2 asin(sqrt f) folds into [0, pi]; a coarse ascending
/// scan over [0, alpha_max] tracks the fold count so targets beyond pi
/// (a full 2 pi turn, say) resolve correctly, then bisection refines
/// inside the bracketing interval.
pub fn calibrate_alpha(
    flip_fraction: &mut dyn FnMut(f64) -> Result<f64, NegfError>,
    theta_target: f64,
    alpha_max: f64,
    coarse_steps: usize,
) -> Result<Calibration, NegfError> {
    if coarse_steps < 2 {
        return Err(NegfError::ScanTooShort);
    }
    let raw_angle = |f: f64| 2.0 * f.clamp(0.0, 1.0).sqrt().asin();

    let mut alphas = Vec::with_capacity(coarse_steps + 1);
    let mut raws = Vec::with_capacity(coarse_steps + 1);
    for i in 0..=coarse_steps {
        let a = alpha_max * i as f64 / coarse_steps as f64;
        alphas.push(a);
        raws.push(raw_angle(flip_fraction(a)?));
    }

    let unwrap = |m: usize, raw: f64| {
        if m % 2 == 0 {
            m as f64 * std::f64::consts::PI + raw
        } else {
            (m + 1) as f64 * std::f64::consts::PI - raw
        }
    };
    // predictor-corrector unwrap: theta grows monotonically and nearly
    // linearly over one cell, so of the two fold branches take the one
    // closer to the linear continuation of the previous two samples
    let mut folds = vec![0usize; raws.len()];
    let mut thetas = vec![0.0; raws.len()];
    thetas[0] = raws[0];
    for i in 1..raws.len() {
        let m = folds[i - 1];
        let step_prev = if i >= 2 {
            thetas[i - 1] - thetas[i - 2]
        } else {
            0.0
        };
        let expected = thetas[i - 1] + step_prev;
        let c_same = unwrap(m, raws[i]);
        let c_next = unwrap(m + 1, raws[i]);
        if (c_same - expected).abs() <= (c_next - expected).abs() {
            folds[i] = m;
            thetas[i] = c_same;
        } else {
            folds[i] = m + 1;
            thetas[i] = c_next;
        }
    }

    let seg = (1..thetas.len())
        .find(|&i| (thetas[i - 1] - theta_target) * (thetas[i] - theta_target) <= 0.0)
        .ok_or(NegfError::NoBracket {
            lo: 0.0,
            hi: alpha_max,
        })?;

    let (mut lo, mut hi) = (alphas[seg - 1], alphas[seg]);
    let mut th_lo = thetas[seg - 1];
    let m_lo = folds[seg - 1];
    let mut f_mid = raws[seg - 1];
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        f_mid = flip_fraction(mid)?;
        // a fold may sit inside the bracket, where f alone cannot tell
        // theta from 2 pi - theta; the centred slope picks the branch and
        // keeps its sign right even straddling the extremum
        let delta = 1e-3 * (hi - lo);
        let f_minus = flip_fraction(mid - delta)?;
        let f_plus = flip_fraction(mid + delta)?;
        let even_branch = m_lo % 2 == 0;
        let m_mid = if (f_plus >= f_minus) == even_branch {
            m_lo
        } else {
            m_lo + 1
        };
        let th_mid = unwrap(m_mid, raw_angle(f_mid));
        if (th_lo - theta_target) * (th_mid - theta_target) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            th_lo = th_mid;
        }
        if (hi - lo) < 1e-9 * alpha_max.max(1e-300) {
            break;
        }
    }
    let alpha = 0.5 * (lo + hi);
    Ok(Calibration {
        alpha_evm: alpha,
        theta_rad: theta_target,
        flip_fraction: f_mid,
    })
}
