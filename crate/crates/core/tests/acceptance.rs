//! End-to-end acceptance gate.
//!
//! Eight release criteria, each printed as one pass/fail line. Every
//! criterion collects its own failure details so a red run reports all
//! broken criteria at once instead of stopping at the first.

use std::f64::consts::PI;
use std::process::Command;

use num_complex::Complex64;

use spinwire::constants::wavevector;
use spinwire::experiments::{
    init_arm_alpha_full_turn, run_beamsplitter_check, run_dj, run_grover, run_init_sweep,
    run_nand, OperatingPoint, PAD_LEN, ROTATION_LEN,
};
use spinwire::gatesim::{
    self, cnot, grover_diffusion, grover_oracle, hadamard_pseudospin, hadamard_spin,
    oracle_unitary, pauli_x_spin, pauli_z_spin, phase_on_pseudospin1, pseudospin_not, ry_spin,
    rz_spin, GroverTarget, OracleCase, TwoQubitState,
};
use spinwire::lattice::{build_device, transverse_mode_energy, RashbaAxis, Segment};
use spinwire::linalg::herm_residual;
use spinwire::negf::{calibrate_alpha, reverse_transmission, transmission, Contacts, NegfError};
use spinwire::scatter::{
    coincidence_probability, fifty_fifty_barrier, quarter_phase_length, slab_matrix, Medium,
    SlabSpec,
};
use spinwire::Spin;

type Cx = Complex64;

/// Accumulates failure details for one criterion.
struct Checks {
    errors: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks { errors: Vec::new() }
    }

    fn require(&mut self, ok: bool, detail: String) {
        if !ok {
            self.errors.push(detail);
        }
    }

    fn close(&mut self, what: &str, observed: f64, expected: f64, tol: f64) {
        self.require(
            (observed - expected).abs() <= tol,
            format!("{what}: observed {observed:.6e}, expected {expected:.6e} +- {tol:.1e}"),
        );
    }

    fn at_most(&mut self, what: &str, observed: f64, limit: f64) {
        self.require(
            observed <= limit,
            format!("{what}: observed {observed:.6e}, limit {limit:.1e}"),
        );
    }

    fn at_least(&mut self, what: &str, observed: f64, floor: f64) {
        self.require(
            observed >= floor,
            format!("{what}: observed {observed:.6e}, floor {floor:.1e}"),
        );
    }

    fn finish(self) -> Result<(), String> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(self.errors.join("; "))
        }
    }
}

fn fail(e: impl std::fmt::Display) -> String {
    format!("run error: {e}")
}

// --- criterion 1: analytic splitter design and its embedded twin ----------

fn splitter_design() -> Result<(), String> {
    let mut c = Checks::new();
    let m_eff = 0.05;
    let e_ev = 1.0;
    let outer = Medium::new(0.0, m_eff);
    let v2 = fifty_fifty_barrier(e_ev, 0.0).map_err(fail)?;
    let barrier = Medium::new(v2, m_eff);
    let length_m = quarter_phase_length(&barrier, e_ev, 1).map_err(fail)?;
    let s = slab_matrix(
        &SlabSpec {
            outer,
            barrier,
            length_m,
            incidence_rad: 0.0,
        },
        e_ev,
    )
    .map_err(fail)?;

    c.close("|t11|^2", s.t11.norm_sqr(), 0.5, 1e-9);
    c.close("|t22|^2", s.t22.norm_sqr(), 0.5, 1e-9);
    c.close("|r12|^2", s.r12.norm_sqr(), 0.5, 1e-9);
    c.close("|r21|^2", s.r21.norm_sqr(), 0.5, 1e-9);
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let j = Cx::new(0.0, inv);
    let one = Cx::new(inv, 0.0);
    let entry_dev = [s.t11 - j, s.r12 - one, s.r21 - one, s.t22 - j]
        .iter()
        .fold(0.0_f64, |m, z| m.max(z.norm()));
    c.at_most("matrix entries vs quarter-turn form", entry_dev, 1e-9);
    c.close(
        "coincidence probability",
        coincidence_probability(&s).map_err(fail)?,
        1.0,
        1e-9,
    );

    let op = OperatingPoint::standard();
    let rep = run_beamsplitter_check(&op, e_ev).map_err(fail)?;
    c.close("embedded straight split", rep.t_straight, 0.5, 0.05);
    c.close("embedded cross split", rep.t_cross, 0.5, 0.05);
    c.finish()
}

// --- criterion 2: transport sanity against closed forms -------------------

/// Continuum transmission of a rectangular barrier of height `v_ev` and
/// length `l_m` at longitudinal kinetic energy `e_ev`.
fn barrier_closed_form(e_ev: f64, v_ev: f64, l_m: f64, m_eff: f64) -> f64 {
    if (e_ev - v_ev).abs() < 1e-12 {
        let k = wavevector(v_ev, m_eff);
        return 1.0 / (1.0 + (k * l_m).powi(2) / 4.0);
    }
    if e_ev < v_ev {
        let kappa = wavevector(v_ev - e_ev, m_eff);
        1.0 / (1.0 + v_ev.powi(2) * (kappa * l_m).sinh().powi(2) / (4.0 * e_ev * (v_ev - e_ev)))
    } else {
        let k = wavevector(e_ev - v_ev, m_eff);
        1.0 / (1.0 + v_ev.powi(2) * (k * l_m).sin().powi(2) / (4.0 * e_ev * (e_ev - v_ev)))
    }
}

fn transport_sanity() -> Result<(), String> {
    let mut c = Checks::new();
    let op = OperatingPoint::standard();

    let dev = build_device(&op.device_spec(vec![Segment::Plain { len: 40 }])).map_err(fail)?;
    let res = transmission(&dev, &Contacts::open(), op.e_op_ev, &op.params).map_err(fail)?;
    for port in 0..2 {
        for spin in Spin::BOTH {
            c.close(
                &format!("pristine T port {port} spin {spin}"),
                res.get(port, spin, port, spin),
                1.0,
                1e-6,
            );
            let cross = res.get(port, spin, 1 - port, Spin::Up)
                + res.get(port, spin, 1 - port, Spin::Down);
            c.at_most(&format!("cross-T port {port} spin {spin}"), cross, 1e-8);
        }
    }

    // channel-0 barrier in otherwise decoupled wires is an effectively
    // one-dimensional scatterer once the subband edge is subtracted
    let v_ev = 6e-3;
    let len = 12usize;
    let l_m = len as f64 * op.grid.a_m;
    let floor = op.band_offset_ev + transverse_mode_energy(op.channel_width, op.hopping_ev(), 1);
    let bdev = build_device(&op.device_spec(vec![
        Segment::Plain { len: PAD_LEN },
        Segment::Barrier {
            channel: 0,
            v_ev,
            len,
        },
        Segment::Plain { len: PAD_LEN },
    ]))
    .map_err(fail)?;
    let mut worst = 0.0_f64;
    let mut worst_e = 0.0_f64;
    let mut i = 1;
    loop {
        let e_kin = 0.002 * i as f64;
        if e_kin > 0.1 * op.hopping_ev() {
            break;
        }
        let res = transmission(&bdev, &Contacts::open(), floor + e_kin, &op.params).map_err(fail)?;
        let want = barrier_closed_form(e_kin, v_ev, l_m, op.grid.m_eff);
        for spin in Spin::BOTH {
            let got = res.get(0, spin, 0, spin);
            if (got - want).abs() > worst {
                worst = (got - want).abs();
                worst_e = e_kin;
            }
        }
        i += 1;
    }
    c.require(
        worst <= 1e-3,
        format!("barrier T vs closed form: worst |diff| {worst:.3e} at E_kin {worst_e} eV, limit 1e-3"),
    );
    c.finish()
}

// --- criterion 3: spin-rotation coupling calibration ----------------------

fn flip_fraction_device(op: &OperatingPoint, alpha_evm: f64) -> Result<f64, NegfError> {
    let dev = build_device(&op.device_spec(vec![
        Segment::Plain { len: PAD_LEN },
        Segment::Rashba {
            channel: 0,
            alpha_evm,
            axis: RashbaAxis::RotateY,
            len: ROTATION_LEN,
        },
        Segment::Plain { len: PAD_LEN },
    ]))
    .expect("geometry is static under the coupling scan");
    let res = transmission(&dev, &Contacts::open(), op.e_op_ev, &op.params)?;
    Ok(res.get(0, Spin::Up, 0, Spin::Down))
}

fn rotation_calibration() -> Result<(), String> {
    let mut c = Checks::new();
    let op = OperatingPoint::standard();
    let mut flip = |alpha: f64| flip_fraction_device(&op, alpha);
    let cal = calibrate_alpha(&mut flip, PI, 2.2e-10, 64).map_err(fail)?;
    let reference = 1e-10;
    c.at_most(
        "half-turn coupling relative error vs 1e-10 eV m",
        (cal.alpha_evm - reference).abs() / reference,
        0.10,
    );
    c.at_least("spin-flip fraction at calibrated coupling", cal.flip_fraction, 0.999);
    c.finish()
}

// --- criterion 4: initialisation interferometer sweep ---------------------

fn interferometer_sweep() -> Result<(), String> {
    let mut c = Checks::new();
    let op = OperatingPoint::standard();
    let a_full = init_arm_alpha_full_turn(&op);
    let rep = run_init_sweep(&op, 0.0, a_full, 9).map_err(fail)?;
    c.at_most("sweep RMS error vs closed forms", rep.rms_error, 0.05);
    c.at_least("zero-angle port-1-up share", rep.endpoint_port1_up, 0.95);
    c.at_least("full-turn port-0-up share", rep.endpoint_port0_up, 0.95);
    c.finish()
}

// --- criterion 5: one-call function classification ------------------------

fn function_classification() -> Result<(), String> {
    let mut c = Checks::new();
    let op = OperatingPoint::standard();
    let rep = run_dj(&op).map_err(fail)?;
    c.require(
        rep.cases.len() == OracleCase::ALL.len(),
        format!("expected {} cases, got {}", OracleCase::ALL.len(), rep.cases.len()),
    );
    for case in &rep.cases {
        let label = case.case.label();
        let ideal = gatesim::run_dj(case.case).map_err(fail)?;
        // the reference computes the answer with certainty
        c.close(
            &format!("{label} reference probability"),
            ideal.p_pseudo0.max(ideal.p_pseudo1),
            1.0,
            1e-12,
        );
        c.require(
            case.contrast.is_high(),
            format!("{label} port contrast {:.3e} below 10", case.contrast.contrast()),
        );
        c.require(
            case.verdict_correct,
            format!(
                "{label} verdict {:?} disagrees with reference {:?}",
                case.verdict, ideal.verdict
            ),
        );
        // measured and reference dominant ports must agree
        c.require(
            (case.p_port0 > case.p_port1) == (case.ideal_p0 > case.ideal_p1),
            format!(
                "{label} dominant port mismatch: measured ({:.3e}, {:.3e}), reference ({:.1}, {:.1})",
                case.p_port0, case.p_port1, case.ideal_p0, case.ideal_p1
            ),
        );
    }
    c.finish()
}

// --- criterion 6: single-iteration search ---------------------------------

fn search_targets() -> Result<(), String> {
    let mut c = Checks::new();
    let op = OperatingPoint::standard();
    let rep = run_grover(&op).map_err(fail)?;
    c.require(
        rep.cases.len() == GroverTarget::ALL.len(),
        format!("expected {} targets, got {}", GroverTarget::ALL.len(), rep.cases.len()),
    );
    for case in &rep.cases {
        let label = format!("target {}-{}", case.target.pseudo, case.target.spin);
        let ideal = gatesim::run_grover(case.target).map_err(fail)?;
        c.close(
            &format!("{label} reference probability"),
            ideal.probabilities[case.target.index()],
            1.0,
            1e-12,
        );
        c.require(
            case.found_target,
            format!("{label}: dominant channel is {:?}", case.dominant),
        );
        c.at_least(
            &format!("{label} dominant share"),
            case.p_target_normalized,
            0.90,
        );
    }
    c.finish()
}

// --- criterion 7: inverting logic element ---------------------------------

fn logic_element() -> Result<(), String> {
    let mut c = Checks::new();
    let op = OperatingPoint::standard();
    let rep = run_nand(&op).map_err(fail)?;
    c.require(
        rep.truth_table_correct,
        "measured truth table disagrees with the reference".to_string(),
    );
    for input in &rep.inputs {
        let want_high = input.channel == 0 && input.spin == Spin::Up;
        c.require(
            input.measured_high == want_high,
            format!(
                "input ({}, {}): output high = {}, expected {}",
                input.channel, input.spin, input.measured_high, want_high
            ),
        );
    }
    c.require(
        rep.contrast.is_high(),
        format!("high/low contrast {:.3e} below 10", rep.contrast.contrast()),
    );
    c.finish()
}

// --- criterion 8: cross-cutting property checks ---------------------------

fn unitary_residual_ok(c: &mut Checks, what: &str, u: &spinwire::gatesim::GateUnitary) {
    c.at_most(&format!("{what} unitarity"), u.unitarity_residual(), 1e-12);
}

fn run_cli(dir: &std::path::Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_spinwire"))
        .args(["beamsplit", "--out"])
        .arg(dir)
        .output()
        .map_err(fail)?;
    if !out.status.success() {
        return Err(format!(
            "CLI run failed with status {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(())
}

fn property_suites() -> Result<(), String> {
    let mut c = Checks::new();
    let m_eff = 0.05;

    // scattering matrices stay unitary across the energy range
    for &e_ev in &[0.3, 0.6, 1.0, 1.5, 2.0] {
        for n in 1..=2u32 {
            let v2 = fifty_fifty_barrier(e_ev, 0.0).map_err(fail)?;
            let barrier = Medium::new(v2, m_eff);
            let s = slab_matrix(
                &SlabSpec {
                    outer: Medium::new(0.0, m_eff),
                    barrier,
                    length_m: quarter_phase_length(&barrier, e_ev, n).map_err(fail)?,
                    incidence_rad: 0.0,
                },
                e_ev,
            )
            .map_err(fail)?;
            c.at_most(
                &format!("slab unitarity at {e_ev} eV (n = {n})"),
                s.unitarity_residual(),
                1e-10,
            );
        }
    }

    // a device with every segment kind assembles to a Hermitian Hamiltonian
    let op = OperatingPoint::standard();
    let mixed = vec![
        Segment::Plain { len: 3 },
        Segment::Rashba {
            channel: 0,
            alpha_evm: 1.5e-10,
            axis: RashbaAxis::RotateY,
            len: 5,
        },
        Segment::Coupler { v2_ev: 0.12, len: 6 },
        Segment::Barrier {
            channel: 1,
            v_ev: 0.05,
            len: 4,
        },
        Segment::Rashba {
            channel: 1,
            alpha_evm: 0.8e-10,
            axis: RashbaAxis::RotateZ,
            len: 4,
        },
        Segment::Plain { len: 3 },
    ];
    let dev = build_device(&op.device_spec(mixed)).map_err(fail)?;
    c.at_most("device Hamiltonian Hermiticity", herm_residual(&dev.to_dense()), 1e-14);

    // gate set stays unitary and preserves state norms
    unitary_residual_ok(&mut c, "spin Hadamard", &hadamard_spin());
    unitary_residual_ok(&mut c, "pseudo-spin Hadamard", &hadamard_pseudospin());
    unitary_residual_ok(&mut c, "spin X", &pauli_x_spin());
    unitary_residual_ok(&mut c, "spin Z", &pauli_z_spin());
    unitary_residual_ok(&mut c, "CNOT", &cnot());
    unitary_residual_ok(&mut c, "pseudo-spin NOT", &pseudospin_not());
    unitary_residual_ok(&mut c, "Ry(0.7)", &ry_spin(0.7));
    unitary_residual_ok(&mut c, "Rz(1.3)", &rz_spin(1.3));
    unitary_residual_ok(&mut c, "phase(0.9)", &phase_on_pseudospin1(0.9));
    unitary_residual_ok(&mut c, "diffusion", &grover_diffusion());
    for case in OracleCase::ALL {
        unitary_residual_ok(&mut c, &format!("oracle {}", case.label()), &oracle_unitary(case));
    }
    for target in GroverTarget::ALL {
        unitary_residual_ok(
            &mut c,
            &format!("search oracle {}", target.label()),
            &grover_oracle(target),
        );
    }
    let chain = hadamard_pseudospin()
        .then(&grover_oracle(GroverTarget {
            pseudo: 1,
            spin: Spin::Down,
        }))
        .then(&cnot())
        .then(&ry_spin(0.45))
        .then(&grover_diffusion());
    for pseudo in 0..2 {
        for spin in Spin::BOTH {
            let out = chain.apply(&TwoQubitState::basis(pseudo, spin));
            c.close(
                &format!("norm after gate chain from ({pseudo}, {spin})"),
                out.norm_sqr(),
                1.0,
                1e-12,
            );
        }
    }

    // spin-summed transmission obeys reciprocity on a mixed device
    let fwd = transmission(&dev, &Contacts::open(), op.e_op_ev, &op.params).map_err(fail)?;
    let rev = reverse_transmission(&dev, &Contacts::open(), op.e_op_ev, &op.params).map_err(fail)?;
    for i in 0..2 {
        for o in 0..2 {
            c.at_most(
                &format!("reciprocity defect {i}->{o}"),
                (fwd.port_to_port(i, o) - rev.port_to_port(o, i)).abs(),
                1e-8,
            );
        }
    }

    // zero coupling must not flip spins at all
    let zdev = build_device(&op.device_spec(vec![
        Segment::Plain { len: PAD_LEN },
        Segment::Rashba {
            channel: 0,
            alpha_evm: 0.0,
            axis: RashbaAxis::RotateY,
            len: ROTATION_LEN,
        },
        Segment::Plain { len: PAD_LEN },
    ]))
    .map_err(fail)?;
    let zres = transmission(&zdev, &Contacts::open(), op.e_op_ev, &op.params).map_err(fail)?;
    let mut flip_max = 0.0_f64;
    for in_port in 0..2 {
        for out_port in 0..2 {
            flip_max = flip_max
                .max(zres.get(in_port, Spin::Up, out_port, Spin::Down))
                .max(zres.get(in_port, Spin::Down, out_port, Spin::Up));
        }
    }
    c.at_most("spin flip at zero coupling", flip_max, 1e-10);

    // two identical CLI invocations into the same directory must produce
    // byte-identical artifacts
    let dir = tempfile::tempdir().map_err(fail)?;
    run_cli(dir.path())?;
    let names = ["report.json", "beamsplit.csv", "manifest.json"];
    let mut first = Vec::new();
    for name in names {
        first.push(std::fs::read(dir.path().join(name)).map_err(fail)?);
    }
    run_cli(dir.path())?;
    for (name, before) in names.iter().zip(&first) {
        let after = std::fs::read(dir.path().join(name)).map_err(fail)?;
        c.require(
            &after == before,
            format!("CLI artifact {name} changed between identical runs"),
        );
    }
    c.finish()
}

// --------------------------------------------------------------------------

#[test]
fn acceptance_gate() {
    let criteria: Vec<(&str, fn() -> Result<(), String>)> = vec![
        ("analytic splitter design and embedded split", splitter_design),
        ("transport sanity vs closed forms", transport_sanity),
        ("spin-rotation coupling calibration", rotation_calibration),
        ("initialisation interferometer sweep", interferometer_sweep),
        ("one-call function classification", function_classification),
        ("single-iteration search", search_targets),
        ("inverting logic element", logic_element),
        ("cross-cutting property checks", property_suites),
    ];
    let mut failures = Vec::new();
    for (idx, (what, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let verdict = if outcome.is_ok() { "PASS" } else { "FAIL" };
        println!("criterion {} ({what}): {verdict}", idx + 1);
        if let Err(detail) = outcome {
            failures.push(format!("criterion {} ({what}): {detail}", idx + 1));
        }
    }
    assert!(failures.is_empty(), "\n{}", failures.join("\n"));
}
