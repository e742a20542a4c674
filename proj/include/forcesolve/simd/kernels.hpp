#pragma once

// Batched point kernels shared by the losses, the pose/contact solvers and the
// metrics. Every kernel has a scalar reference and an AVX2 variant; the AVX2
// path performs the same IEEE operations in the same order (no FMA contraction)
// so the two agree bitwise.

#include <cstddef>
#include <string_view>

namespace forcesolve::simd {

enum class Isa { kScalar, kAvx2 };

// Structure-of-arrays view of n points.
struct PointsSoA {
  const double* x;
  const double* y;
  const double* z;
};

struct MutablePointsSoA {
  double* x;
  double* y;
  double* z;
};

// Rigid transform, row-major rotation.
struct Affine {
  double r[9];
  double t[3];
};

struct Intrinsics {
  double fx, fy, cx, cy;
};

struct KernelTable {
  Isa isa;
  // out = R * in + t.
  void (*transform)(const Affine& a, PointsSoA in, std::size_t n, MutablePointsSoA out);
  // Pinhole projection. Returns the index of the first point with z <= 0, or n
  // if every point is in front of the camera; pixels are written regardless.
  std::size_t (*project)(const Intrinsics& k, PointsSoA cam, std::size_t n, double* u, double* v);
  // out[i] = weight[i] * ((u - obs_u)^2 + (v - obs_v)^2).
  void (*squared_residuals)(const double* u, const double* v, const double* obs_u,
                            const double* obs_v, const double* weight, std::size_t n,
                            double* out);
};

const KernelTable& scalar_kernels();
// Null when the binary was built without AVX2 support.
const KernelTable* avx2_kernels();

bool cpu_supports(Isa isa);

// Kernel table chosen once per process: AVX2 when the CPU supports it, unless
// FORCESOLVE_SIMD=scalar is set in the environment.
const KernelTable& active_kernels();

std::string_view isa_name(Isa isa);

}  // namespace forcesolve::simd
