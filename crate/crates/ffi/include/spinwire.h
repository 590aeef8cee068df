/* C interface to the spinwire solvers; regenerated by the crate build script. */

#ifndef SPINWIRE_H
#define SPINWIRE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Rotation axis of a spin-orbit section.
 */
typedef enum {
  SW_AXIS_ROTATE_Y = 0,
  SW_AXIS_ROTATE_Z = 1,
} SwAxis;

/**
 * What sits between the clean leads of a transmission probe.
 */
typedef enum {
  /**
   * Both channels clean; the separating wall stays at full height.
   */
  SW_PROBE_KIND_PRISTINE = 0,
  /**
   * Electrostatic barrier of `potential_ev` on `channel`.
   */
  SW_PROBE_KIND_BARRIER = 1,
  /**
   * Wall window lowered to `potential_ev` so the channels couple.
   */
  SW_PROBE_KIND_COUPLER = 2,
  /**
   * Spin-orbit section of `coupling_evm` on `channel` about `axis`.
   */
  SW_PROBE_KIND_ROTATION = 3,
} SwProbeKind;

/**
 * Spin polarity along the quantization axis.
 */
typedef enum {
  SW_SPIN_UP = 0,
  SW_SPIN_DOWN = 1,
} SwSpin;

/**
 * Result of every fallible call in this interface.
 */
typedef enum {
  SW_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  SW_STATUS_NULL_ARGUMENT = 1,
  /**
   * A parameter was out of range; see `sw_last_error`.
   */
  SW_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The device geometry could not be built.
   */
  SW_STATUS_GEOMETRY = 3,
  /**
   * The transport solver failed to converge or rejected the energy.
   */
  SW_STATUS_SOLVER = 4,
  /**
   * An internal tuning stage found no solution.
   */
  SW_STATUS_TUNING = 5,
  /**
   * A panic was caught at the boundary; state may be inconsistent.
   */
  SW_STATUS_INTERNAL = 6,
} SwStatus;

/**
 * Opaque result of an interferometer coupling sweep.
 */
typedef struct SwInitSweep SwInitSweep;

/**
 * Opaque bundle of grid, geometry, energy and solver settings.
 */
typedef struct SwOperatingPoint SwOperatingPoint;

/**
 * Description of a probe device. Only the fields used by `kind` are
 * read: `potential_ev` for barriers and couplers, `coupling_evm` and
 * `axis` for rotations, `channel` for barriers and rotations.
 */
typedef struct {
  SwProbeKind kind;
  uint32_t channel;
  double potential_ev;
  double coupling_evm;
  uint32_t length_sites;
  SwAxis axis;
} SwProbe;

/**
 * Outcome of one oracle case of the constant/balanced classifier.
 */
typedef struct {
  double p_port0;
  double p_port1;
  double contrast;
  /**
   * 0 = constant, 1 = balanced, -1 = verdict withheld (low contrast).
   */
  int32_t verdict;
  /**
   * 1 when the verdict matches the ideal classification.
   */
  uint8_t correct;
} SwDjOutcome;

/**
 * Outcome of a single-pass search for one marked state.
 */
typedef struct {
  /**
   * Outgoing weights: port0-up, port0-down, port1-up, port1-down.
   */
  double p[4];
  uint32_t dominant_pseudo;
  SwSpin dominant_spin;
  /**
   * Weight of the marked state among everything transmitted.
   */
  double share;
  /**
   * 1 when the dominant output is the marked state.
   */
  uint8_t found;
} SwGroverOutcome;

/**
 * Outcome of the inverting logic element over all four inputs.
 */
typedef struct {
  /**
   * Collector transmission per input: (0,up), (0,down), (1,up), (1,down).
   */
  double p_high[4];
  double contrast;
  /**
   * 1 when exactly the (0,up) input reads high.
   */
  uint8_t truth_correct;
  /**
   * Largest spin-flipped weight reaching the collector.
   */
  double spin_flip_leak;
} SwNandOutcome;

/**
 * One sweep point; probabilities are ordered port0-up, port0-down,
 * port1-up, port1-down.
 */
typedef struct {
  double alpha_evm;
  double theta_rad;
  double p[4];
  double analytic[4];
} SwInitPoint;

/**
 * Calibration of the half-turn coupling extracted during a sweep.
 */
typedef struct {
  double alpha_pi_evm;
  /**
   * Relative deviation from the nominal half-turn coupling.
   */
  double rel_error;
  double flip_fraction;
} SwCalibration;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or an empty string.
 * Valid until the next failing call on the same thread.
 */
const char *sw_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sw_version(void);

/**
 * The default working point: 1 nm grid, effective mass 0.05, ten-row
 * channels, 0.128 eV of kinetic energy above the first subband edge.
 */
SwOperatingPoint *sw_operating_point_standard(void);

/**
 * Builds a custom operating point. The kinetic energy must stay inside
 * the single-mode window of the chosen channel width.
 */
SwStatus sw_operating_point_new(double spacing_m,
                                double effective_mass,
                                uint32_t channel_width,
                                double wall_ev,
                                double kinetic_ev,
                                double band_offset_ev,
                                double eta_ev,
                                SwOperatingPoint **out);

/**
 * Absolute injection energy of the operating point in eV.
 */
SwStatus sw_operating_point_energy_ev(const SwOperatingPoint *op, double *out_ev);

void sw_operating_point_free(SwOperatingPoint *op);

/**
 * Barrier height that splits a wave of energy `e_ev` arriving from a
 * region at potential `v1_ev` evenly between reflection and transmission.
 */
SwStatus sw_splitter_barrier_height(double e_ev, double v1_ev, double *out_v2_ev);

/**
 * `n`-th slab length at which the transmitted and reflected parts of a
 * wave of energy `e_ev` pick up a quarter-turn relative phase inside a
 * barrier of height `v_ev` (effective mass `m_eff`).
 */
SwStatus sw_splitter_length(double v_ev,
                            double m_eff,
                            double e_ev,
                            uint32_t n,
                            double *out_length_m);

/**
 * Ideal splitter-rotation-splitter interferometer outcome for one input.
 * Writes the four outgoing probabilities to `out_p[0..4]` in the order
 * port0-up, port0-down, port1-up, port1-down.
 */
SwStatus sw_interferometer_probabilities(double theta_rad,
                                         uint32_t input_port,
                                         SwSpin input_spin,
                                         double *out_p);

/**
 * Spin-resolved transmission through a probe at `kinetic_ev` above the
 * first subband edge. Writes 16 values to `out_t`: for each input port
 * (0, 1), input spin (up, down), output port, output spin, in that
 * nesting order.
 */
SwStatus sw_transmission(const SwOperatingPoint *op,
                         const SwProbe *probe,
                         double kinetic_ev,
                         double *out_t);

/**
 * Runs one oracle case (0..=3 for f0..f3) through the full device.
 */
SwStatus sw_run_dj(const SwOperatingPoint *op, uint32_t case_, SwDjOutcome *out);

/**
 * Runs the search device with the marked state (`pseudo`, `spin`).
 */
SwStatus sw_run_grover(const SwOperatingPoint *op,
                       uint32_t pseudo,
                       SwSpin spin,
                       SwGroverOutcome *out);

/**
 * Runs the inverting logic element.
 */
SwStatus sw_run_nand(const SwOperatingPoint *op, SwNandOutcome *out);

/**
 * Sweeps the interferometer arm coupling from `alpha_min_evm` to
 * `alpha_max_evm` over `steps` points (both in [0, 5e-10] eV·m,
 * ascending, at least 2 points).
 */
SwStatus sw_init_sweep_run(const SwOperatingPoint *op,
                           double alpha_min_evm,
                           double alpha_max_evm,
                           uint32_t steps,
                           SwInitSweep **out);

/**
 * Number of points in the sweep; 0 for a NULL handle.
 */
uint32_t sw_init_sweep_len(const SwInitSweep *sweep);

/**
 * Copies point `index` of the sweep into `out`.
 */
SwStatus sw_init_sweep_point(const SwInitSweep *sweep, uint32_t index, SwInitPoint *out);

/**
 * Root-mean-square deviation of the sweep from the ideal curves.
 */
SwStatus sw_init_sweep_rms(const SwInitSweep *sweep, double *out_rms);

/**
 * Half-turn coupling calibration recorded with the sweep.
 */
SwStatus sw_init_sweep_calibration(const SwInitSweep *sweep, SwCalibration *out);

void sw_init_sweep_free(SwInitSweep *sweep);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPINWIRE_H */
