#ifndef EVFI_REF_HPP
#define EVFI_REF_HPP

#include "evfi/accum.hpp"
#include "evfi/synth.hpp"
#include "evfi/types.hpp"

// Serial reference implementations, written straight from the definitions.
// They are the oracles for the parallel kernels: tests compare both paths,
// and the bench target reports the speedup. Nothing in the main library may
// call into this namespace.

namespace evfi::ref {

/// Mean SSIM by the direct definition: an explicit Gaussian-weighted double
/// loop per valid window position.
double ssim_direct(const GrayFrame& a, const GrayFrame& b);

/// Accumulation by a single linear scan over all events.
AccumulationFrame accumulate_direct(const EventStream& s, Timestamp t0, Timestamp window,
                                    AccumMode mode = AccumMode::Signed);

/// Voxel grid by per-event splatting in stream order.
VoxelGrid voxel_direct(const EventStream& s, Timestamp t0, Timestamp t1, int bins);

/// Event generation by an unmasked per-pixel serial simulation. With
/// sim_step = 1 this is the brute-force timing oracle.
EventStream generate_events_serial(const SceneSpec& scene, const EventCameraModel& model,
                                   int supersample = 4, const CameraView& view = {});

} // namespace evfi::ref

#endif
