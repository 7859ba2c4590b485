#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace drape {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// Raised when an input violates a documented precondition. The CLI maps it to
// exit code 1; every other exception is a runtime failure (exit code 2).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Unit quaternion stored in (w, x, y, z) order everywhere in the project.
struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static Quat identity() { return {}; }
    static Quat from_vec(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }
    static Quat from_axis_angle(const Vec3& axis, double angle);
    static Quat from_rotmat(const Mat3& r);

    Vec4 vec() const { return {w, x, y, z}; }
    double norm() const;
    Quat normalized() const;
    Quat conjugate() const { return {w, -x, -y, -z}; }
    bool finite() const;
};

Quat operator*(const Quat& a, const Quat& b);
Quat operator-(const Quat& q);

struct GaussianPrimitive {
    Vec3 position = Vec3::Zero();
    Quat rotation;
    Vec3 scale = Vec3::Ones();
    double opacity = 1.0;
    Vec3 color = Vec3::Zero();  // zero-order SH: one RGB value, view independent

    // Throws ValidationError when an invariant is violated.
    void validate() const;
};

struct Camera {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    Mat3 rotation = Mat3::Identity();  // world -> camera
    Vec3 translation = Vec3::Zero();
    int width = 1;
    int height = 1;

    void validate() const;
    Vec3 center() const { return -rotation.transpose() * translation; }
    // Optical axis in world coordinates.
    Vec3 forward() const { return rotation.row(2).transpose(); }

    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                          double focal, int width, int height);
};

// Row-major RGB image with values in [0,1] (the renderer and losses are free
// to produce intermediate values outside that range, e.g. gradients).
class Image {
public:
    static constexpr int kChannels = 3;

    Image() = default;
    Image(int height, int width, double fill = 0.0);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }

    double& at(int y, int x, int c) { return data_[index(y, x, c)]; }
    double at(int y, int x, int c) const { return data_[index(y, x, c)]; }
    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Image& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }
    bool all_finite() const;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

// Per-pixel (dx, dy) displacement in pixels.
class FlowField {
public:
    FlowField() = default;
    FlowField(int height, int width, double fill = 0.0);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    double& dx(int y, int x) { return data_[index(y, x)]; }
    double& dy(int y, int x) { return data_[index(y, x) + 1]; }
    double dx(int y, int x) const { return data_[index(y, x)]; }
    double dy(int y, int x) const { return data_[index(y, x) + 1]; }
    std::size_t index(int y, int x) const {
        return (static_cast<std::size_t>(y) * width_ + x) * 2;
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }
    bool all_finite() const;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

// Checked conversion: throws on non-finite input or ||q|| != 1 (tol 1e-6).
Mat3 quat_to_rotmat(const Quat& q);
// Polynomial form of the rotation matrix, valid (and differentiated) for any q.
Mat3 quat_to_rotmat_unchecked(const Quat& q);
// Pulls dL/dR back to dL/dq through quat_to_rotmat_unchecked.
Vec4 quat_to_rotmat_backward(const Quat& q, const Mat3& grad_r);

// Sigma = R diag(s)^2 R^T. Throws on non-positive scale.
Mat3 covariance3d(const Vec3& scale, const Quat& q);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Deterministic 64-bit FNV-1a; used for manifest and config hashes.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 1469598103934665603ULL);
std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

// Independent RNG seed for a (seed, stream) pair (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Thread count used by the data-parallel kernels; 0 restores the OpenMP default.
void set_thread_count(int threads);
int thread_count();

}  // namespace drape
