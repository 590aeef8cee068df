//! C ABI over the spinwire solvers.
//!
//! Conventions:
//! * Every fallible call returns an `SwStatus`; results travel through out
//!   pointers that are written only on `SW_STATUS_OK`.
//! * `sw_last_error` returns a message for the most recent failure on the
//!   calling thread; the pointer stays valid until that thread fails again.
//! * Handles (`SwOperatingPoint`, `SwInitSweep`) are opaque; free them with
//!   the matching `_free` function. Passing NULL to `_free` is a no-op.
//! * Units are SI unless the name says otherwise: `_ev` fields are in
//!   electron volts, `_evm` in eV·m, lengths in meters.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use spinwire::experiments::{
    run_dj_cases, run_grover_targets, run_init_sweep, run_nand, ExperimentError, InitReport,
    OperatingPoint, PAD_LEN,
};
use spinwire::gatesim::{GroverTarget, OracleCase};
use spinwire::lattice::{build_device, transverse_mode_energy, GridSpec, RashbaAxis, Segment};
use spinwire::negf::{transmission, Contacts, NegfParams};
use spinwire::scatter::{
    fifty_fifty_barrier, interferometer_probabilities, quarter_phase_length, Medium,
};
use spinwire::Spin;

/// Result of every fallible call in this interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A parameter was out of range; see `sw_last_error`.
    InvalidArgument = 2,
    /// The device geometry could not be built.
    Geometry = 3,
    /// The transport solver failed to converge or rejected the energy.
    Solver = 4,
    /// An internal tuning stage found no solution.
    Tuning = 5,
    /// A panic was caught at the boundary; state may be inconsistent.
    Internal = 6,
}

/// Spin polarity along the quantization axis.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwSpin {
    Up = 0,
    Down = 1,
}

impl From<SwSpin> for Spin {
    fn from(s: SwSpin) -> Spin {
        match s {
            SwSpin::Up => Spin::Up,
            SwSpin::Down => Spin::Down,
        }
    }
}

impl From<Spin> for SwSpin {
    fn from(s: Spin) -> SwSpin {
        match s {
            Spin::Up => SwSpin::Up,
            Spin::Down => SwSpin::Down,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).expect("interior NULs removed"));
}

fn fail(err: ExperimentError) -> SwStatus {
    let status = match &err {
        ExperimentError::Geometry(_) => SwStatus::Geometry,
        ExperimentError::Negf(_) => SwStatus::Solver,
        ExperimentError::Tuning { .. } => SwStatus::Tuning,
        _ => SwStatus::InvalidArgument,
    };
    set_error(err.to_string());
    status
}

fn invalid(msg: String) -> SwStatus {
    set_error(msg);
    SwStatus::InvalidArgument
}

/// Absorbs panics from the solver layer so they never unwind into C.
fn guarded(f: impl FnOnce() -> SwStatus) -> SwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".to_string());
            SwStatus::Internal
        }
    }
}

/// Message for the most recent failure on this thread, or an empty string.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

// ---------------------------------------------------------------------------
// operating point
// ---------------------------------------------------------------------------

/// Opaque bundle of grid, geometry, energy and solver settings.
pub struct SwOperatingPoint(OperatingPoint);

/// The default working point: 1 nm grid, effective mass 0.05, ten-row
/// channels, 0.128 eV of kinetic energy above the first subband edge.
#[no_mangle]
pub extern "C" fn sw_operating_point_standard() -> *mut SwOperatingPoint {
    Box::into_raw(Box::new(SwOperatingPoint(OperatingPoint::standard())))
}

/// Builds a custom operating point. The kinetic energy must stay inside
/// the single-mode window of the chosen channel width.
#[no_mangle]
pub extern "C" fn sw_operating_point_new(
    spacing_m: f64,
    effective_mass: f64,
    channel_width: u32,
    wall_ev: f64,
    kinetic_ev: f64,
    band_offset_ev: f64,
    eta_ev: f64,
    out: *mut *mut SwOperatingPoint,
) -> SwStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out pointer is NULL".to_string());
            return SwStatus::NullArgument;
        }
        if !(spacing_m.is_finite() && spacing_m > 0.0) {
            return invalid(format!("grid spacing must be positive, got {spacing_m:e} m"));
        }
        if !(effective_mass.is_finite() && effective_mass > 0.0) {
            return invalid(format!(
                "effective mass must be positive, got {effective_mass}"
            ));
        }
        if channel_width == 0 {
            return invalid("channel width must be at least 1".to_string());
        }
        if !wall_ev.is_finite() || !band_offset_ev.is_finite() {
            return invalid("wall and band offset must be finite".to_string());
        }
        if !(eta_ev.is_finite() && eta_ev > 0.0) {
            return invalid(format!("eta must be positive, got {eta_ev:e} eV"));
        }
        let grid = GridSpec {
            a_m: spacing_m,
            m_eff: effective_mass,
        };
        let width = channel_width as usize;
        let t = grid.hopping_ev();
        let e1 = transverse_mode_energy(width, t, 1);
        let window = transverse_mode_energy(width.max(2), t, 2) - e1;
        if !(kinetic_ev > 0.0 && kinetic_ev < window) {
            return invalid(format!(
                "kinetic energy {kinetic_ev:e} eV leaves the single-mode window (0, {window:e}) eV"
            ));
        }
        let op = OperatingPoint {
            grid,
            channel_width: width,
            wall_potential_ev: wall_ev,
            band_offset_ev,
            e_op_ev: band_offset_ev + e1 + kinetic_ev,
            params: NegfParams { eta_ev },
        };
        unsafe { *out = Box::into_raw(Box::new(SwOperatingPoint(op))) };
        SwStatus::Ok
    })
}

/// Absolute injection energy of the operating point in eV.
#[no_mangle]
pub extern "C" fn sw_operating_point_energy_ev(
    op: *const SwOperatingPoint,
    out_ev: *mut f64,
) -> SwStatus {
    if op.is_null() || out_ev.is_null() {
        set_error("operating point or out pointer is NULL".to_string());
        return SwStatus::NullArgument;
    }
    unsafe { *out_ev = (*op).0.e_op_ev };
    SwStatus::Ok
}

#[no_mangle]
pub extern "C" fn sw_operating_point_free(op: *mut SwOperatingPoint) {
    if !op.is_null() {
        drop(unsafe { Box::from_raw(op) });
    }
}

// ---------------------------------------------------------------------------
// analytic splitter design
// ---------------------------------------------------------------------------

/// Barrier height that splits a wave of energy `e_ev` arriving from a
/// region at potential `v1_ev` evenly between reflection and transmission.
#[no_mangle]
pub extern "C" fn sw_splitter_barrier_height(
    e_ev: f64,
    v1_ev: f64,
    out_v2_ev: *mut f64,
) -> SwStatus {
    guarded(|| {
        if out_v2_ev.is_null() {
            set_error("out pointer is NULL".to_string());
            return SwStatus::NullArgument;
        }
        match fifty_fifty_barrier(e_ev, v1_ev) {
            Ok(v2) => {
                unsafe { *out_v2_ev = v2 };
                SwStatus::Ok
            }
            Err(e) => invalid(e.to_string()),
        }
    })
}

/// `n`-th slab length at which the transmitted and reflected parts of a
/// wave of energy `e_ev` pick up a quarter-turn relative phase inside a
/// barrier of height `v_ev` (effective mass `m_eff`).
#[no_mangle]
pub extern "C" fn sw_splitter_length(
    v_ev: f64,
    m_eff: f64,
    e_ev: f64,
    n: u32,
    out_length_m: *mut f64,
) -> SwStatus {
    guarded(|| {
        if out_length_m.is_null() {
            set_error("out pointer is NULL".to_string());
            return SwStatus::NullArgument;
        }
        if n == 0 {
            return invalid("phase index n must be at least 1".to_string());
        }
        if !(m_eff.is_finite() && m_eff > 0.0) {
            return invalid(format!("effective mass must be positive, got {m_eff}"));
        }
        match quarter_phase_length(&Medium::new(v_ev, m_eff), e_ev, n) {
            Ok(l) => {
                unsafe { *out_length_m = l };
                SwStatus::Ok
            }
            Err(e) => invalid(e.to_string()),
        }
    })
}

/// Ideal splitter-rotation-splitter interferometer outcome for one input.
/// Writes the four outgoing probabilities to `out_p[0..4]` in the order
/// port0-up, port0-down, port1-up, port1-down.
#[no_mangle]
pub extern "C" fn sw_interferometer_probabilities(
    theta_rad: f64,
    input_port: u32,
    input_spin: SwSpin,
    out_p: *mut f64,
) -> SwStatus {
    guarded(|| {
        if out_p.is_null() {
            set_error("out pointer is NULL".to_string());
            return SwStatus::NullArgument;
        }
        if input_port > 1 {
            return invalid(format!("input port must be 0 or 1, got {input_port}"));
        }
        if !theta_rad.is_finite() {
            return invalid("theta must be finite".to_string());
        }
        let p = interferometer_probabilities(theta_rad, input_port as usize, input_spin.into());
        let out = unsafe { std::slice::from_raw_parts_mut(out_p, 4) };
        out.copy_from_slice(&[p.p0_up, p.p0_down, p.p1_up, p.p1_down]);
        SwStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// transmission probes
// ---------------------------------------------------------------------------

/// What sits between the clean leads of a transmission probe.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwProbeKind {
    /// Both channels clean; the separating wall stays at full height.
    Pristine = 0,
    /// Electrostatic barrier of `potential_ev` on `channel`.
    Barrier = 1,
    /// Wall window lowered to `potential_ev` so the channels couple.
    Coupler = 2,
    /// Spin-orbit section of `coupling_evm` on `channel` about `axis`.
    Rotation = 3,
}

/// Rotation axis of a spin-orbit section.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwAxis {
    RotateY = 0,
    RotateZ = 1,
}

/// Description of a probe device. Only the fields used by `kind` are
/// read: `potential_ev` for barriers and couplers, `coupling_evm` and
/// `axis` for rotations, `channel` for barriers and rotations.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SwProbe {
    pub kind: SwProbeKind,
    pub channel: u32,
    pub potential_ev: f64,
    pub coupling_evm: f64,
    pub length_sites: u32,
    pub axis: SwAxis,
}

/// Spin-resolved transmission through a probe at `kinetic_ev` above the
/// first subband edge. Writes 16 values to `out_t`: for each input port
/// (0, 1), input spin (up, down), output port, output spin, in that
/// nesting order.
#[no_mangle]
pub extern "C" fn sw_transmission(
    op: *const SwOperatingPoint,
    probe: *const SwProbe,
    kinetic_ev: f64,
    out_t: *mut f64,
) -> SwStatus {
    guarded(|| {
        if op.is_null() || probe.is_null() || out_t.is_null() {
            set_error("operating point, probe or out pointer is NULL".to_string());
            return SwStatus::NullArgument;
        }
        let op = unsafe { &(*op).0 };
        let probe = unsafe { *probe };
        let inner = match probe.kind {
            SwProbeKind::Pristine => Vec::new(),
            SwProbeKind::Barrier | SwProbeKind::Rotation => {
                if probe.channel > 1 {
                    return invalid(format!("channel must be 0 or 1, got {}", probe.channel));
                }
                if probe.length_sites == 0 {
                    return invalid("length_sites must be at least 1".to_string());
                }
                if probe.kind == SwProbeKind::Barrier {
                    vec![Segment::Barrier {
                        channel: probe.channel as usize,
                        v_ev: probe.potential_ev,
                        len: probe.length_sites as usize,
                    }]
                } else {
                    vec![Segment::Rashba {
                        channel: probe.channel as usize,
                        alpha_evm: probe.coupling_evm,
                        axis: match probe.axis {
                            SwAxis::RotateY => RashbaAxis::RotateY,
                            SwAxis::RotateZ => RashbaAxis::RotateZ,
                        },
                        len: probe.length_sites as usize,
                    }]
                }
            }
            SwProbeKind::Coupler => {
                if probe.length_sites == 0 {
                    return invalid("length_sites must be at least 1".to_string());
                }
                vec![Segment::Coupler {
                    v2_ev: probe.potential_ev,
                    len: probe.length_sites as usize,
                }]
            }
        };
        let mut segments = vec![Segment::Plain { len: PAD_LEN }];
        segments.extend(inner);
        segments.push(Segment::Plain { len: PAD_LEN });
        let dev = match build_device(&op.device_spec(segments)) {
            Ok(d) => d,
            Err(e) => return fail(e.into()),
        };
        let floor =
            op.band_offset_ev + transverse_mode_energy(op.channel_width, op.hopping_ev(), 1);
        let res = match transmission(&dev, &Contacts::open(), floor + kinetic_ev, &op.params) {
            Ok(r) => r,
            Err(e) => return fail(e.into()),
        };
        let out = unsafe { std::slice::from_raw_parts_mut(out_t, 16) };
        let mut k = 0;
        for in_port in 0..2 {
            for in_spin in Spin::BOTH {
                for out_port in 0..2 {
                    for out_spin in Spin::BOTH {
                        out[k] = res.get(in_port, in_spin, out_port, out_spin);
                        k += 1;
                    }
                }
            }
        }
        SwStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// experiments
// ---------------------------------------------------------------------------

/// Outcome of one oracle case of the constant/balanced classifier.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SwDjOutcome {
    pub p_port0: f64,
    pub p_port1: f64,
    pub contrast: f64,
    /// 0 = constant, 1 = balanced, -1 = verdict withheld (low contrast).
    pub verdict: i32,
    /// 1 when the verdict matches the ideal classification.
    pub correct: u8,
}

/// Runs one oracle case (0..=3 for f0..f3) through the full device.
#[no_mangle]
pub extern "C" fn sw_run_dj(
    op: *const SwOperatingPoint,
    case: u32,
    out: *mut SwDjOutcome,
) -> SwStatus {
    guarded(|| {
        if op.is_null() || out.is_null() {
            set_error("operating point or out pointer is NULL".to_string());
            return SwStatus::NullArgument;
        }
        let case = match case {
            0 => OracleCase::F0,
            1 => OracleCase::F1,
            2 => OracleCase::F2,
            3 => OracleCase::F3,
            other => return invalid(format!("oracle case must be 0..=3, got {other}")),
        };
        let report = match run_dj_cases(unsafe { &(*op).0 }, &[case]) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        let c = &report.cases[0];
        let verdict = match c.verdict {
            None => -1,
            Some(spinwire::gatesim::DjVerdict::Constant) => 0,
            Some(spinwire::gatesim::DjVerdict::Balanced) => 1,
        };
        unsafe {
            *out = SwDjOutcome {
                p_port0: c.p_port0,
                p_port1: c.p_port1,
                contrast: c.contrast.contrast(),
                verdict,
                correct: c.verdict_correct as u8,
            };
        }
        SwStatus::Ok
    })
}

/// Outcome of a single-pass search for one marked state.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SwGroverOutcome {
    /// Outgoing weights: port0-up, port0-down, port1-up, port1-down.
    pub p: [f64; 4],
    pub dominant_pseudo: u32,
    pub dominant_spin: SwSpin,
    /// Weight of the marked state among everything transmitted.
    pub share: f64,
    /// 1 when the dominant output is the marked state.
    pub found: u8,
}

/// Runs the search device with the marked state (`pseudo`, `spin`).
#[no_mangle]
pub extern "C" fn sw_run_grover(
    op: *const SwOperatingPoint,
    pseudo: u32,
    spin: SwSpin,
    out: *mut SwGroverOutcome,
) -> SwStatus {
    guarded(|| {
        if op.is_null() || out.is_null() {
            set_error("operating point or out pointer is NULL".to_string());
            return SwStatus::NullArgument;
        }
        if pseudo > 1 {
            return invalid(format!("pseudo state must be 0 or 1, got {pseudo}"));
        }
        let target = GroverTarget {
            pseudo: pseudo as usize,
            spin: spin.into(),
        };
        let report = match run_grover_targets(unsafe { &(*op).0 }, &[target]) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        let c = &report.cases[0];
        unsafe {
            *out = SwGroverOutcome {
                p: c.currents.as_array(),
                dominant_pseudo: c.dominant.pseudo as u32,
                dominant_spin: c.dominant.spin.into(),
                share: c.p_target_normalized,
                found: c.found_target as u8,
            };
        }
        SwStatus::Ok
    })
}

/// Outcome of the inverting logic element over all four inputs.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SwNandOutcome {
    /// Collector transmission per input: (0,up), (0,down), (1,up), (1,down).
    pub p_high: [f64; 4],
    pub contrast: f64,
    /// 1 when exactly the (0,up) input reads high.
    pub truth_correct: u8,
    /// Largest spin-flipped weight reaching the collector.
    pub spin_flip_leak: f64,
}

/// Runs the inverting logic element.
#[no_mangle]
pub extern "C" fn sw_run_nand(op: *const SwOperatingPoint, out: *mut SwNandOutcome) -> SwStatus {
    guarded(|| {
        if op.is_null() || out.is_null() {
            set_error("operating point or out pointer is NULL".to_string());
            return SwStatus::NullArgument;
        }
        let report = match run_nand(unsafe { &(*op).0 }) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        let mut p_high = [0.0; 4];
        for (slot, input) in p_high.iter_mut().zip(&report.inputs) {
            *slot = input.p_high;
        }
        unsafe {
            *out = SwNandOutcome {
                p_high,
                contrast: report.contrast.contrast(),
                truth_correct: report.truth_table_correct as u8,
                spin_flip_leak: report.spin_flip_leak,
            };
        }
        SwStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// coupling sweep
// ---------------------------------------------------------------------------

/// Opaque result of an interferometer coupling sweep.
pub struct SwInitSweep(InitReport);

/// One sweep point; probabilities are ordered port0-up, port0-down,
/// port1-up, port1-down.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SwInitPoint {
    pub alpha_evm: f64,
    pub theta_rad: f64,
    pub p: [f64; 4],
    pub analytic: [f64; 4],
}

/// Calibration of the half-turn coupling extracted during a sweep.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SwCalibration {
    pub alpha_pi_evm: f64,
    /// Relative deviation from the nominal half-turn coupling.
    pub rel_error: f64,
    pub flip_fraction: f64,
}

/// Sweeps the interferometer arm coupling from `alpha_min_evm` to
/// `alpha_max_evm` over `steps` points (both in [0, 5e-10] eV·m,
/// ascending, at least 2 points).
#[no_mangle]
pub extern "C" fn sw_init_sweep_run(
    op: *const SwOperatingPoint,
    alpha_min_evm: f64,
    alpha_max_evm: f64,
    steps: u32,
    out: *mut *mut SwInitSweep,
) -> SwStatus {
    guarded(|| {
        if op.is_null() || out.is_null() {
            set_error("operating point or out pointer is NULL".to_string());
            return SwStatus::NullArgument;
        }
        match run_init_sweep(
            unsafe { &(*op).0 },
            alpha_min_evm,
            alpha_max_evm,
            steps as usize,
        ) {
            Ok(report) => {
                unsafe { *out = Box::into_raw(Box::new(SwInitSweep(report))) };
                SwStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of points in the sweep; 0 for a NULL handle.
#[no_mangle]
pub extern "C" fn sw_init_sweep_len(sweep: *const SwInitSweep) -> u32 {
    if sweep.is_null() {
        return 0;
    }
    unsafe { &(*sweep).0 }.points.len() as u32
}

/// Copies point `index` of the sweep into `out`.
#[no_mangle]
pub extern "C" fn sw_init_sweep_point(
    sweep: *const SwInitSweep,
    index: u32,
    out: *mut SwInitPoint,
) -> SwStatus {
    if sweep.is_null() || out.is_null() {
        set_error("sweep handle or out pointer is NULL".to_string());
        return SwStatus::NullArgument;
    }
    let report = unsafe { &(*sweep).0 };
    let Some(p) = report.points.get(index as usize) else {
        return invalid(format!(
            "point index {index} out of range for {} points",
            report.points.len()
        ));
    };
    unsafe {
        *out = SwInitPoint {
            alpha_evm: p.alpha_evm,
            theta_rad: p.theta_rad,
            p: p.currents.as_array(),
            analytic: p.analytic,
        };
    }
    SwStatus::Ok
}

/// Root-mean-square deviation of the sweep from the ideal curves.
#[no_mangle]
pub extern "C" fn sw_init_sweep_rms(sweep: *const SwInitSweep, out_rms: *mut f64) -> SwStatus {
    if sweep.is_null() || out_rms.is_null() {
        set_error("sweep handle or out pointer is NULL".to_string());
        return SwStatus::NullArgument;
    }
    unsafe { *out_rms = (*sweep).0.rms_error };
    SwStatus::Ok
}

/// Half-turn coupling calibration recorded with the sweep.
#[no_mangle]
pub extern "C" fn sw_init_sweep_calibration(
    sweep: *const SwInitSweep,
    out: *mut SwCalibration,
) -> SwStatus {
    if sweep.is_null() || out.is_null() {
        set_error("sweep handle or out pointer is NULL".to_string());
        return SwStatus::NullArgument;
    }
    let report = unsafe { &(*sweep).0 };
    unsafe {
        *out = SwCalibration {
            alpha_pi_evm: report.alpha_pi_evm,
            rel_error: report.alpha_pi_rel_error,
            flip_fraction: report.calibrated_flip_fraction,
        };
    }
    SwStatus::Ok
}

#[no_mangle]
pub extern "C" fn sw_init_sweep_free(sweep: *mut SwInitSweep) {
    if !sweep.is_null() {
        drop(unsafe { Box::from_raw(sweep) });
    }
}
