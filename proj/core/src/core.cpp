#include "drape/core.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace drape {

Quat Quat::from_axis_angle(const Vec3& axis, double angle) {
    const Vec3 a = axis.normalized();
    const double s = std::sin(0.5 * angle);
    return {std::cos(0.5 * angle), a.x() * s, a.y() * s, a.z() * s};
}

Quat Quat::from_rotmat(const Mat3& r) {
    Quat q;
    const double trace = r(0, 0) + r(1, 1) + r(2, 2);
    if (trace > 0.0) {
        const double s = std::sqrt(trace + 1.0) * 2.0;
        q.w = 0.25 * s;
        q.x = (r(2, 1) - r(1, 2)) / s;
        q.y = (r(0, 2) - r(2, 0)) / s;
        q.z = (r(1, 0) - r(0, 1)) / s;
    } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
        const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
        q.w = (r(2, 1) - r(1, 2)) / s;
        q.x = 0.25 * s;
        q.y = (r(0, 1) + r(1, 0)) / s;
        q.z = (r(0, 2) + r(2, 0)) / s;
    } else if (r(1, 1) > r(2, 2)) {
        const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
        q.w = (r(0, 2) - r(2, 0)) / s;
        q.x = (r(0, 1) + r(1, 0)) / s;
        q.y = 0.25 * s;
        q.z = (r(1, 2) + r(2, 1)) / s;
    } else {
        const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
        q.w = (r(1, 0) - r(0, 1)) / s;
        q.x = (r(0, 2) + r(2, 0)) / s;
        q.y = (r(1, 2) + r(2, 1)) / s;
        q.z = 0.25 * s;
    }
    if (q.w < 0.0) q = -q;
    return q;
}

double Quat::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quat Quat::normalized() const {
    const double n = norm();
    return {w / n, x / n, y / n, z / n};
}

bool Quat::finite() const {
    return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

Quat operator*(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quat operator-(const Quat& q) { return {-q.w, -q.x, -q.y, -q.z}; }

void GaussianPrimitive::validate() const {
    if (!position.allFinite() || !rotation.finite() || !scale.allFinite() ||
        !std::isfinite(opacity) || !color.allFinite()) {
        throw ValidationError("gaussian primitive has non-finite fields");
    }
    if (std::abs(rotation.norm() - 1.0) > 1e-6) {
        throw ValidationError("gaussian rotation is not a unit quaternion");
    }
    if ((scale.array() <= 0.0).any()) {
        throw ValidationError("gaussian scale must be strictly positive");
    }
    if (opacity < 0.0 || opacity > 1.0) {
        throw ValidationError("gaussian opacity outside [0,1]");
    }
    if ((color.array() < 0.0).any() || (color.array() > 1.0).any()) {
        throw ValidationError("gaussian color outside [0,1]");
    }
}

void Camera::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("camera focal lengths must be > 0");
    if (width < 1 || height < 1) throw ValidationError("camera resolution must be >= 1");
    if (!rotation.allFinite() || !translation.allFinite()) {
        throw ValidationError("camera extrinsics are not finite");
    }
    const double err = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (err > 1e-6) throw ValidationError("camera rotation is not orthonormal");
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal,
                       int width, int height) {
    const Vec3 z = (target - eye).normalized();
    const Vec3 x = z.cross(up).normalized();
    const Vec3 y = z.cross(x);
    Camera cam;
    cam.rotation.row(0) = x.transpose();
    cam.rotation.row(1) = y.transpose();
    cam.rotation.row(2) = z.transpose();
    cam.translation = -cam.rotation * eye;
    cam.fx = cam.fy = focal;
    cam.width = width;
    cam.height = height;
    cam.cx = 0.5 * (width - 1);
    cam.cy = 0.5 * (height - 1);
    return cam;
}

Image::Image(int height, int width, double fill)
    : height_(height), width_(width),
      data_(static_cast<std::size_t>(height) * width * kChannels, fill) {
    if (height < 0 || width < 0) throw ValidationError("negative image dimensions");
}

bool Image::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

FlowField::FlowField(int height, int width, double fill)
    : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width * 2, fill) {
    if (height < 0 || width < 0) throw ValidationError("negative flow dimensions");
}

bool FlowField::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Mat3 quat_to_rotmat_unchecked(const Quat& q) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

Mat3 quat_to_rotmat(const Quat& q) {
    if (!q.finite()) throw ValidationError("quaternion has non-finite components");
    if (std::abs(q.norm() - 1.0) > 1e-6) throw ValidationError("quaternion is not unit norm");
    return quat_to_rotmat_unchecked(q);
}

Vec4 quat_to_rotmat_backward(const Quat& q, const Mat3& g) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    Mat3 dw, dx, dy, dz;
    dw << 0, -z, y, z, 0, -x, -y, x, 0;
    dx << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
    dy << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
    dz << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
    return 2.0 * Vec4(g.cwiseProduct(dw).sum(), g.cwiseProduct(dx).sum(),
                      g.cwiseProduct(dy).sum(), g.cwiseProduct(dz).sum());
}

Mat3 covariance3d(const Vec3& scale, const Quat& q) {
    if (!scale.allFinite() || (scale.array() <= 0.0).any()) {
        throw ValidationError("covariance3d requires strictly positive scales");
    }
    const Mat3 r = quat_to_rotmat(q);
    const Mat3 rs = r * scale.asDiagonal();
    return rs * rs.transpose();
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {
int g_threads = 0;
}

void set_thread_count(int threads) {
    g_threads = threads;
    omp_set_num_threads(threads > 0 ? threads : omp_get_num_procs());
}

int thread_count() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

}  // namespace drape
