//! Tight-binding model of the two-wire device.
//!
//! Geometry: two parallel channels of `channel_width` rows each, separated
//! by a single high-potential wall row, discretised on a square grid with
//! spacing `a_m`. Column index x runs along transport; both channels extend
//! into semi-infinite pristine leads on either side.
//!
//! Each site carries a spinor, so every lattice block below is a 2x2
//! complex matrix. Plain hopping is -t·I. Inside a spin-rotation segment
//! the longitudinal bonds become -t_eff·exp(-i·lambda·sigma), the exact
//! lattice form of a linear spin-orbit term: the transmitted spinor is
//! rotated by 2·lambda per bond while both spin components keep the same
//! orbital dynamics.

use ndarray::Array2;
use thiserror::Error;

use crate::constants;
use crate::linalg::{CMat, Cx};

/// 2x2 spin block attached to a site or bond.
pub type SpinBlock = [[Cx; 2]; 2];

fn block_scalar(v: f64) -> SpinBlock {
    [
        [Cx::new(v, 0.0), Cx::new(0.0, 0.0)],
        [Cx::new(0.0, 0.0), Cx::new(v, 0.0)],
    ]
}

fn block_dagger(b: &SpinBlock) -> SpinBlock {
    [
        [b[0][0].conj(), b[1][0].conj()],
        [b[0][1].conj(), b[1][1].conj()],
    ]
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("device has no segments")]
    EmptyDevice,
    #[error("channel width must be at least one row")]
    ZeroWidth,
    #[error("segment length must be at least one column")]
    ZeroLength,
    #[error("channel index {channel} out of range (device has channels 0 and 1)")]
    BadChannel { channel: usize },
    #[error("spin-rotation segment must end before the last device column")]
    RotationTouchesRightLead,
    #[error("{what} must be finite")]
    NonFinite { what: &'static str },
}

/// Discretisation parameters shared by device and leads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Lattice constant in metres.
    pub a_m: f64,
    /// Effective mass in bare-electron-mass units.
    pub m_eff: f64,
}

impl GridSpec {
    pub fn hopping_ev(&self) -> f64 {
        constants::hopping_ev(self.a_m, self.m_eff)
    }
}

/// Which axis the carrier spin precesses about inside a rotation segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RashbaAxis {
    /// Standard spin-orbit geometry (gate field normal to the plane):
    /// longitudinal motion rotates the spin about y, and the matching
    /// transverse bond term is included.
    RotateY,
    /// In-plane gate field: longitudinal bonds pick up a sigma_z phase,
    /// so propagation rotates the spin about z. Transverse bonds are
    /// untouched.
    RotateZ,
}

/// One longitudinal section of the device, laid out left to right.
#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    /// Both channels pristine, wall at full height.
    Plain { len: usize },
    /// Uniform electrostatic shift on every row of one channel.
    Barrier { channel: usize, v_ev: f64, len: usize },
    /// Spin-orbit section on one channel. The rotation acts on the `len`
    /// bonds leaving its columns to the right, so the precession angle is
    /// exactly `precession_angle` for this length.
    Rashba {
        channel: usize,
        alpha_evm: f64,
        axis: RashbaAxis,
        len: usize,
    },
    /// Wall lowered to `v2_ev` so the channels tunnel-couple.
    Coupler { v2_ev: f64, len: usize },
}

impl Segment {
    pub fn len(&self) -> usize {
        match *self {
            Segment::Plain { len }
            | Segment::Barrier { len, .. }
            | Segment::Rashba { len, .. }
            | Segment::Coupler { len, .. } => len,
        }
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn channel(&self) -> Option<usize> {
        match *self {
            Segment::Barrier { channel, .. } | Segment::Rashba { channel, .. } => Some(channel),
            _ => None,
        }
    }

    fn mirrored(&self) -> Segment {
        let mut s = self.clone();
        match &mut s {
            Segment::Barrier { channel, .. } | Segment::Rashba { channel, .. } => {
                *channel = 1 - *channel;
            }
            _ => {}
        }
        s
    }
}

/// Declarative device description; [`build_device`] turns it into matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    pub grid: GridSpec,
    /// Rows per channel; the full cross-section has 2*width + 1 rows.
    pub channel_width: usize,
    /// On-site potential of the wall row in eV.
    pub wall_potential_ev: f64,
    /// Uniform background added to every site (a pure gauge shift).
    pub band_offset_ev: f64,
    pub segments: Vec<Segment>,
}

impl DeviceSpec {
    /// Same device with the two channels swapped.
    pub fn mirrored(&self) -> DeviceSpec {
        DeviceSpec {
            segments: self.segments.iter().map(Segment::mirrored).collect(),
            ..self.clone()
        }
    }

    pub fn nx(&self) -> usize {
        self.segments.iter().map(Segment::len).sum()
    }
}

/// Assembled device: per-site potentials plus 2x2 bond blocks, with
/// helpers that serve block columns to the transport solver.
#[derive(Debug, Clone)]
pub struct Device {
    pub grid: GridSpec,
    channel_width: usize,
    wall_potential_ev: f64,
    band_offset_ev: f64,
    /// Site potential in eV, indexed (x, y); excludes the kinetic 4t.
    potential: Array2<f64>,
    /// Bond (x, y) -> (x+1, y); shape (nx-1, ny).
    x_bonds: Array2<SpinBlock>,
    /// Bond (x, y) -> (x, y+1); shape (nx, ny-1).
    y_bonds: Array2<SpinBlock>,
}

/// Rows occupied by a channel (0 = lower, 1 = upper).
pub fn channel_rows(channel: usize, width: usize) -> std::ops::Range<usize> {
    match channel {
        0 => 0..width,
        1 => width + 1..2 * width + 1,
        _ => panic!("channel index {channel}"),
    }
}

pub fn build_device(spec: &DeviceSpec) -> Result<Device, GeometryError> {
    if spec.segments.is_empty() {
        return Err(GeometryError::EmptyDevice);
    }
    if spec.channel_width == 0 {
        return Err(GeometryError::ZeroWidth);
    }
    for (name, v) in [
        ("grid spacing", spec.grid.a_m),
        ("effective mass", spec.grid.m_eff),
        ("wall potential", spec.wall_potential_ev),
        ("band offset", spec.band_offset_ev),
    ] {
        if !v.is_finite() || (name != "wall potential" && name != "band offset" && v <= 0.0) {
            return Err(GeometryError::NonFinite { what: name });
        }
    }

    let w = spec.channel_width;
    let ny = 2 * w + 1;
    let nx = spec.nx();
    let t = spec.grid.hopping_ev();

    let mut potential = Array2::from_elem((nx, ny), spec.band_offset_ev);
    for x in 0..nx {
        potential[(x, w)] += spec.wall_potential_ev;
    }
    let mut x_bonds = Array2::from_elem((nx.saturating_sub(1), ny), block_scalar(-t));
    let mut y_bonds = Array2::from_elem((nx, ny - 1), block_scalar(-t));

    let mut x0 = 0usize;
    for seg in &spec.segments {
        if seg.is_empty() {
            return Err(GeometryError::ZeroLength);
        }
        if let Some(ch) = seg.channel() {
            if ch > 1 {
                return Err(GeometryError::BadChannel { channel: ch });
            }
        }
        let len = seg.len();
        match *seg {
            Segment::Plain { .. } => {}
            Segment::Barrier { channel, v_ev, .. } => {
                if !v_ev.is_finite() {
                    return Err(GeometryError::NonFinite { what: "barrier potential" });
                }
                for x in x0..x0 + len {
                    for y in channel_rows(channel, w) {
                        potential[(x, y)] += v_ev;
                    }
                }
            }
            Segment::Coupler { v2_ev, .. } => {
                if !v2_ev.is_finite() {
                    return Err(GeometryError::NonFinite { what: "coupler potential" });
                }
                for x in x0..x0 + len {
                    // replace, not add: the wall opens down to v2
                    potential[(x, w)] = spec.band_offset_ev + v2_ev;
                }
            }
            Segment::Rashba {
                channel,
                alpha_evm,
                axis,
                ..
            } => {
                if !alpha_evm.is_finite() {
                    return Err(GeometryError::NonFinite { what: "spin-orbit strength" });
                }
                if x0 + len > nx.saturating_sub(1) {
                    return Err(GeometryError::RotationTouchesRightLead);
                }
                let lambda = (alpha_evm / (2.0 * spec.grid.a_m * t)).atan();
                let t_eff = (t * t + (alpha_evm / (2.0 * spec.grid.a_m)).powi(2)).sqrt();
                let (cl, sl) = (lambda.cos(), lambda.sin());
                // -t_eff * exp(-i lambda sigma_axis) on rightward bonds
                let x_block = match axis {
                    RashbaAxis::RotateY => [
                        [Cx::new(-t_eff * cl, 0.0), Cx::new(t_eff * sl, 0.0)],
                        [Cx::new(-t_eff * sl, 0.0), Cx::new(-t_eff * cl, 0.0)],
                    ],
                    RashbaAxis::RotateZ => [
                        [Cx::new(-t_eff * cl, t_eff * sl), Cx::new(0.0, 0.0)],
                        [Cx::new(0.0, 0.0), Cx::new(-t_eff * cl, -t_eff * sl)],
                    ],
                };
                for x in x0..x0 + len {
                    for y in channel_rows(channel, w) {
                        x_bonds[(x, y)] = x_block;
                    }
                }
                if axis == RashbaAxis::RotateY {
                    // matching transverse term: -t_eff * exp(+i lambda sigma_x)
                    // on upward bonds inside the channel
                    let y_block = [
                        [Cx::new(-t_eff * cl, 0.0), Cx::new(0.0, -t_eff * sl)],
                        [Cx::new(0.0, -t_eff * sl), Cx::new(-t_eff * cl, 0.0)],
                    ];
                    let rows = channel_rows(channel, w);
                    for x in x0..x0 + len {
                        for y in rows.start..rows.end - 1 {
                            y_bonds[(x, y)] = y_block;
                        }
                    }
                }
            }
        }
        x0 += len;
    }

    Ok(Device {
        grid: spec.grid,
        channel_width: w,
        wall_potential_ev: spec.wall_potential_ev,
        band_offset_ev: spec.band_offset_ev,
        potential,
        x_bonds,
        y_bonds,
    })
}

impl Device {
    pub fn nx(&self) -> usize {
        self.potential.nrows()
    }

    pub fn ny(&self) -> usize {
        self.potential.ncols()
    }

    pub fn channel_width(&self) -> usize {
        self.channel_width
    }

    /// Spinor dimension of one block column.
    pub fn block_dim(&self) -> usize {
        2 * self.ny()
    }

    pub fn hopping_ev(&self) -> f64 {
        self.grid.hopping_ev()
    }

    pub fn potential_ev(&self, x: usize, y: usize) -> f64 {
        self.potential[(x, y)]
    }

    fn column_block(&self, pot_col: impl Fn(usize) -> f64, y_block: impl Fn(usize) -> SpinBlock) -> CMat {
        let ny = self.ny();
        let t4 = 4.0 * self.hopping_ev();
        let mut m = CMat::zeros((2 * ny, 2 * ny));
        for y in 0..ny {
            let d = Cx::new(pot_col(y) + t4, 0.0);
            m[(2 * y, 2 * y)] = d;
            m[(2 * y + 1, 2 * y + 1)] = d;
        }
        for y in 0..ny - 1 {
            let b = y_block(y);
            let bd = block_dagger(&b);
            for s in 0..2 {
                for sp in 0..2 {
                    m[(2 * y + s, 2 * (y + 1) + sp)] = b[s][sp];
                    m[(2 * (y + 1) + s, 2 * y + sp)] = bd[s][sp];
                }
            }
        }
        m
    }

    /// Diagonal block of column x, spin-resolved, shape (2ny, 2ny);
    /// includes the kinetic 4t on site.
    pub fn onsite_block(&self, x: usize) -> CMat {
        self.column_block(|y| self.potential[(x, y)], |y| self.y_bonds[(x, y)])
    }

    /// Coupling block from column x to column x+1.
    pub fn hop_right(&self, x: usize) -> CMat {
        let ny = self.ny();
        let mut m = CMat::zeros((2 * ny, 2 * ny));
        for y in 0..ny {
            let b = self.x_bonds[(x, y)];
            for s in 0..2 {
                for sp in 0..2 {
                    m[(2 * y + s, 2 * y + sp)] = b[s][sp];
                }
            }
        }
        m
    }

    /// Unit-cell diagonal block of the pristine semi-infinite leads.
    pub fn lead_onsite(&self) -> CMat {
        let w = self.channel_width;
        self.column_block(
            |y| {
                self.band_offset_ev
                    + if y == w { self.wall_potential_ev } else { 0.0 }
            },
            |_| block_scalar(-self.hopping_ev()),
        )
    }

    /// Inter-cell coupling of the leads (and lead-device coupling): -t·I.
    pub fn lead_hop(&self) -> CMat {
        let mut m = CMat::zeros((self.block_dim(), self.block_dim()));
        let v = Cx::new(-self.hopping_ev(), 0.0);
        for i in 0..self.block_dim() {
            m[(i, i)] = v;
        }
        m
    }

    /// Full dense Hamiltonian; intended for small test devices only
    /// (the dimension is 2 * nx * ny).
    pub fn to_dense(&self) -> CMat {
        let (nx, ny) = (self.nx(), self.ny());
        let dim = 2 * nx * ny;
        let bd = self.block_dim();
        let mut h = CMat::zeros((dim, dim));
        for x in 0..nx {
            let on = self.onsite_block(x);
            for r in 0..bd {
                for c in 0..bd {
                    h[(x * bd + r, x * bd + c)] = on[(r, c)];
                }
            }
            if x + 1 < nx {
                let hop = self.hop_right(x);
                for r in 0..bd {
                    for c in 0..bd {
                        h[(x * bd + r, (x + 1) * bd + c)] = hop[(r, c)];
                        h[((x + 1) * bd + r, x * bd + c)] = hop[(c, r)].conj();
                    }
                }
            }
        }
        h
    }
}

/// Energy of transverse mode n (1-based) in a hard-wall strip of `width`
/// rows, measured from the 2D band bottom.
pub fn transverse_mode_energy(width: usize, t_ev: f64, n: usize) -> f64 {
    assert!(n >= 1 && n <= width, "mode index {n} for width {width}");
    let arg = n as f64 * std::f64::consts::PI / (width as f64 + 1.0);
    2.0 * t_ev * (1.0 - arg.cos())
}

/// Energy window in which exactly one transverse mode propagates per
/// channel: (first cutoff, second cutoff).
pub fn single_mode_window(width: usize, t_ev: f64) -> (f64, f64) {
    (
        transverse_mode_energy(width, t_ev, 1),
        transverse_mode_energy(width, t_ev, 2),
    )
}

/// Spin rotation angle accumulated across `len` bonds of a rotation
/// segment: 2·atan(alpha / 2at) per bond, exact on the lattice. Reduces
/// to 2 m* alpha L / hbar^2 in the continuum limit.
pub fn precession_angle(alpha_evm: f64, grid: GridSpec, len: usize) -> f64 {
    let t = grid.hopping_ev();
    2.0 * (alpha_evm / (2.0 * grid.a_m * t)).atan() * len as f64
}

/// Longitudinal wavevector (1/m) of mode 1 at kinetic energy `e_ev` over a
/// potential floor `v_ev`, from the lattice dispersion
/// E = eps1 + 2t(1 - cos ka). Returns None below the mode cutoff or above
/// the band.
pub fn longitudinal_wavevector(
    width: usize,
    grid: GridSpec,
    e_ev: f64,
    v_ev: f64,
) -> Option<f64> {
    let t = grid.hopping_ev();
    let eps1 = transverse_mode_energy(width, t, 1);
    let c = 1.0 - (e_ev - v_ev - eps1) / (2.0 * t);
    if !(-1.0..=1.0).contains(&c) {
        return None;
    }
    Some(c.acos() / grid.a_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    fn grid() -> GridSpec {
        GridSpec {
            a_m: 1e-9,
            m_eff: 0.05,
        }
    }

    fn base_spec(segments: Vec<Segment>) -> DeviceSpec {
        DeviceSpec {
            grid: grid(),
            channel_width: 3,
            wall_potential_ev: 50.0,
            band_offset_ev: 0.0,
            segments,
        }
    }

    #[test]
    fn geometry_validation_rejects_bad_specs() {
        assert_eq!(build_device(&base_spec(vec![])).unwrap_err(), GeometryError::EmptyDevice);

        let mut s = base_spec(vec![Segment::Plain { len: 4 }]);
        s.channel_width = 0;
        assert_eq!(build_device(&s).unwrap_err(), GeometryError::ZeroWidth);

        let s = base_spec(vec![Segment::Plain { len: 0 }]);
        assert_eq!(build_device(&s).unwrap_err(), GeometryError::ZeroLength);

        let s = base_spec(vec![
            Segment::Barrier { channel: 2, v_ev: 0.1, len: 2 },
            Segment::Plain { len: 2 },
        ]);
        assert_eq!(build_device(&s).unwrap_err(), GeometryError::BadChannel { channel: 2 });

        // rotation bonds would spill into the right lead
        let s = base_spec(vec![
            Segment::Plain { len: 2 },
            Segment::Rashba {
                channel: 0,
                alpha_evm: 1e-10,
                axis: RashbaAxis::RotateY,
                len: 3,
            },
        ]);
        assert_eq!(build_device(&s).unwrap_err(), GeometryError::RotationTouchesRightLead);

        let s = base_spec(vec![Segment::Barrier {
            channel: 0,
            v_ev: f64::NAN,
            len: 2,
        }]);
        assert!(matches!(build_device(&s).unwrap_err(), GeometryError::NonFinite { .. }));
    }

    #[test]
    fn dense_hamiltonian_is_hermitian_with_all_segment_kinds() {
        let spec = base_spec(vec![
            Segment::Plain { len: 2 },
            Segment::Barrier { channel: 1, v_ev: 0.2, len: 2 },
            Segment::Rashba {
                channel: 0,
                alpha_evm: 2e-10,
                axis: RashbaAxis::RotateY,
                len: 3,
            },
            Segment::Rashba {
                channel: 1,
                alpha_evm: -1e-10,
                axis: RashbaAxis::RotateZ,
                len: 2,
            },
            Segment::Coupler { v2_ev: 0.08, len: 2 },
            Segment::Plain { len: 1 },
        ]);
        let dev = build_device(&spec).unwrap();
        let h = dev.to_dense();
        let t = dev.hopping_ev();
        assert!(linalg::herm_residual(&h) < 1e-14 * t);
    }

    #[test]
    fn potentials_follow_segment_layout() {
        let spec = base_spec(vec![
            Segment::Barrier { channel: 1, v_ev: 0.25, len: 1 },
            Segment::Coupler { v2_ev: 0.08, len: 1 },
            Segment::Plain { len: 1 },
        ]);
        let dev = build_device(&spec).unwrap();
        let w = 3;
        // barrier column: channel-1 rows shifted, channel-0 rows not
        assert_eq!(dev.potential_ev(0, w + 1), 0.25);
        assert_eq!(dev.potential_ev(0, 0), 0.0);
        assert_eq!(dev.potential_ev(0, w), 50.0);
        // coupler column: wall replaced, channels pristine
        assert_eq!(dev.potential_ev(1, w), 0.08);
        assert_eq!(dev.potential_ev(1, w + 2), 0.0);
        // plain column: wall restored
        assert_eq!(dev.potential_ev(2, w), 50.0);
    }

    #[test]
    fn band_offset_is_a_uniform_diagonal_shift() {
        let spec = base_spec(vec![Segment::Plain { len: 2 }]);
        let mut shifted = spec.clone();
        shifted.band_offset_ev = 0.37;
        let (d0, d1) = (build_device(&spec).unwrap(), build_device(&shifted).unwrap());
        let (h0, h1) = (d0.to_dense(), d1.to_dense());
        for r in 0..h0.nrows() {
            for c in 0..h0.ncols() {
                let expect = if r == c { Cx::new(0.37, 0.0) } else { Cx::new(0.0, 0.0) };
                assert!((h1[(r, c)] - h0[(r, c)] - expect).norm() < 1e-12);
            }
        }
        // leads shift with the device
        assert!(
            linalg::max_abs_diff(&d1.lead_onsite(), &d0.lead_onsite()) - 0.37 < 1e-12
        );
    }

    #[test]
    fn mirrored_spec_flips_the_cross_section() {
        let spec = base_spec(vec![
            Segment::Barrier { channel: 0, v_ev: 0.3, len: 2 },
            Segment::Rashba {
                channel: 1,
                alpha_evm: 1e-10,
                axis: RashbaAxis::RotateZ,
                len: 1,
            },
            Segment::Plain { len: 1 },
        ]);
        let dev = build_device(&spec).unwrap();
        let mir = build_device(&spec.mirrored()).unwrap();
        let ny = dev.ny();
        for x in 0..dev.nx() {
            for y in 0..ny {
                assert_eq!(dev.potential_ev(x, y), mir.potential_ev(x, ny - 1 - y));
            }
        }
    }

    #[test]
    fn rotation_bonds_are_scaled_unitaries() {
        let alpha = 3e-10;
        let spec = base_spec(vec![
            Segment::Rashba {
                channel: 0,
                alpha_evm: alpha,
                axis: RashbaAxis::RotateY,
                len: 2,
            },
            Segment::Plain { len: 2 },
        ]);
        let dev = build_device(&spec).unwrap();
        let t = dev.hopping_ev();
        let t_eff = (t * t + (alpha / (2.0 * grid().a_m)).powi(2)).sqrt();
        let hop = dev.hop_right(0);
        // channel-0 row 0 block: B†B = t_eff^2 I
        for s in 0..2 {
            for sp in 0..2 {
                let mut dot = Cx::new(0.0, 0.0);
                for k in 0..2 {
                    dot += hop[(k, s)].conj() * hop[(k, sp)];
                }
                let expect = if s == sp { t_eff * t_eff } else { 0.0 };
                assert!((dot - expect).norm() < 1e-14, "row block not t_eff * unitary");
            }
        }
        // wall row bond stays plain
        let w = 2 * 3; // spin offset of wall row y=3
        assert!((hop[(w, w)] - Cx::new(-t, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rotate_z_leaves_transverse_bonds_alone() {
        let mk = |axis| {
            base_spec(vec![
                Segment::Rashba {
                    channel: 0,
                    alpha_evm: 2e-10,
                    axis,
                    len: 1,
                },
                Segment::Plain { len: 1 },
            ])
        };
        let t = grid().hopping_ev();
        let dy = build_device(&mk(RashbaAxis::RotateY)).unwrap();
        let dz = build_device(&mk(RashbaAxis::RotateZ)).unwrap();
        // on-site block contains the transverse bonds: spin off-diagonal
        // appears only for the RotateY axis
        let oy = dy.onsite_block(0);
        let oz = dz.onsite_block(0);
        assert!(oy[(0, 3)].norm() > 1e-12 * t, "RotateY bond has sigma_x part");
        assert!(oz[(0, 3)].norm() == 0.0);
        assert!((oz[(0, 2)] - Cx::new(-t, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn frozen_mode_energies_and_window() {
        let t = grid().hopping_ev(); // 0.761996422297192 eV
        let eps1 = transverse_mode_energy(10, t, 1);
        assert!((eps1 - 0.06173241836730192).abs() < 1e-15);
        let (lo, hi) = single_mode_window(10, t);
        assert_eq!(lo, eps1);
        assert!((hi / t - 0.31749293433763727).abs() < 1e-14);
        // full-width modes once the wall opens: third mode of a 21-row strip
        let eps3_open = transverse_mode_energy(21, t, 3);
        assert!((eps3_open / t - 0.18073600929096312).abs() < 1e-13);
    }

    #[test]
    fn frozen_precession_angle_and_continuum_limit() {
        let theta = precession_angle(1e-10, grid(), 25);
        assert!((theta - 3.276158737526433).abs() < 1e-12);
        // continuum: 2 m* alpha L / hbar^2 with alpha in J m
        let alpha_j = 1e-12 * crate::constants::EV; // small alpha in eV m
        let l = 25.0 * grid().a_m;
        let continuum = 2.0 * 0.05 * crate::constants::M0 * alpha_j * l
            / (crate::constants::HBAR * crate::constants::HBAR);
        let lattice = precession_angle(1e-12, grid(), 25);
        assert!((lattice - continuum).abs() / continuum < 1e-6);
    }

    #[test]
    fn wavevector_inverts_the_dispersion() {
        let g = grid();
        let t = g.hopping_ev();
        let eps1 = transverse_mode_energy(3, t, 1);
        let e = eps1 + 0.3 * t;
        let k = longitudinal_wavevector(3, g, e, 0.0).unwrap();
        let back = eps1 + 2.0 * t * (1.0 - (k * g.a_m).cos());
        assert!((back - e).abs() < 1e-12);
        assert!(longitudinal_wavevector(3, g, eps1 - 0.01, 0.0).is_none());
        // shifting the floor shifts the usable energy window
        assert!(longitudinal_wavevector(3, g, e, e).is_none());
    }

    #[test]
    fn lead_blocks_match_a_pristine_column() {
        let spec = base_spec(vec![Segment::Plain { len: 3 }]);
        let dev = build_device(&spec).unwrap();
        assert!(linalg::max_abs_diff(&dev.lead_onsite(), &dev.onsite_block(1)) == 0.0);
        assert!(linalg::max_abs_diff(&dev.lead_hop(), &dev.hop_right(0)) == 0.0);
        assert!(linalg::herm_residual(&dev.lead_onsite()) == 0.0);
    }
}
