#pragma once

#include "drape/core.hpp"

#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace drape {

// Rasterizer constants.
inline constexpr double kNearPlane = 0.01;
inline constexpr double kCovarianceFloor = 0.3;  // px^2 added to the 2D covariance diagonal
inline constexpr double kMinAlpha = 1.0 / 255.0;
inline constexpr int kTileSize = 16;

struct Splat2D {
    Vec2 mean = Vec2::Zero();            // pixels; pixel (x, y) has its center at (x, y)
    Mat2 covariance = Mat2::Identity();  // pixels^2, floor already added
    double depth = 1.0;                  // camera-space z
    double opacity = 1.0;
    Vec3 color = Vec3::Zero();
};

// Gradient with respect to a Splat2D. `covariance` is the gradient with
// respect to the full 2x2 matrix (symmetric, off-diagonal entries are the
// per-entry partials); the derivative along the shared off-diagonal parameter
// is covariance(0,1) + covariance(1,0).
struct SplatGrad {
    Vec2 mean = Vec2::Zero();
    Mat2 covariance = Mat2::Zero();
    double opacity = 0.0;
    Vec3 color = Vec3::Zero();
};

// Gradient with respect to a GaussianPrimitive. `rotation` is taken through
// the polynomial rotation-matrix formula, i.e. before any normalization.
struct PrimitiveGrad {
    Vec3 position = Vec3::Zero();
    Vec4 rotation = Vec4::Zero();
    Vec3 scale = Vec3::Zero();
    double opacity = 0.0;
    Vec3 color = Vec3::Zero();
};

// EWA-style first-order projection. Returns nullopt when the primitive is at
// or behind the near plane.
std::optional<Splat2D> project(const GaussianPrimitive& g, const Camera& cam);

// Chains a splat gradient back through project().
PrimitiveGrad project_backward(const GaussianPrimitive& g, const Camera& cam,
                               const SplatGrad& grad);

namespace detail {
struct RasterState;
}

struct RenderOutput {
    Image image;
    std::vector<double> alpha;  // H*W coverage, 1 - final transmittance
    // Contribution records kept for rasterize_backward(); null when the
    // output was produced without them.
    std::shared_ptr<const detail::RasterState> records;
};

// Front-to-back alpha compositing over a global, stable depth sort (ties keep
// input order). Each splat contributes color * a * T with a = opacity * G and
// G the 2D Gaussian normalized to 1 at its mean; contributions with
// a < 1/255 are skipped. Work is binned into 16x16 tiles.
RenderOutput rasterize(std::span<const Splat2D> splats, const Camera& cam, const Vec3& background);

// Exact analytic gradients of the compositing equation, one entry per input
// splat. Deterministic: per-tile partial sums are reduced in tile order.
std::vector<SplatGrad> rasterize_backward(const RenderOutput& output, const Image& grad_image);

// Projection + rasterization of a primitive list.
struct SceneRender {
    RenderOutput raster;
    std::vector<Splat2D> splats;
    std::vector<int> primitive_of_splat;
};

SceneRender render(std::span<const GaussianPrimitive> primitives, const Camera& cam,
                   const Vec3& background);

// One PrimitiveGrad per input primitive (zero for culled ones).
std::vector<PrimitiveGrad> render_backward(const SceneRender& scene,
                                           std::span<const GaussianPrimitive> primitives,
                                           const Camera& cam, const Image& grad_image);

}  // namespace drape
