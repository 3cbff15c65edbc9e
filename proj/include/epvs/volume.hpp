#pragma once
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "epvs/error.hpp"

namespace epvs {

// ---------------------------------------------------------------------------
// Affine
// ---------------------------------------------------------------------------

// 4x4 voxel-to-world transform, row-major, last row (0,0,0,1).
struct Affine {
    std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

    static Affine identity() { return Affine{}; }

    static Affine scaling(double sx, double sy, double sz) {
        Affine a;
        a.m[0] = sx;
        a.m[5] = sy;
        a.m[10] = sz;
        return a;
    }

    double& at(int r, int c) { return m[static_cast<std::size_t>(r * 4 + c)]; }
    double at(int r, int c) const { return m[static_cast<std::size_t>(r * 4 + c)]; }

    std::array<double, 3> apply(double x, double y, double z) const {
        return {at(0, 0) * x + at(0, 1) * y + at(0, 2) * z + at(0, 3),
                at(1, 0) * x + at(1, 1) * y + at(1, 2) * z + at(1, 3),
                at(2, 0) * x + at(2, 1) * y + at(2, 2) * z + at(2, 3)};
    }

    Affine mul(const Affine& o) const {
        Affine r;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double s = 0.0;
                for (int k = 0; k < 4; ++k) s += at(i, k) * o.at(k, j);
                r.at(i, j) = s;
            }
        return r;
    }

    // determinant of the 3x3 direction block
    double det3() const {
        return at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1)) -
               at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0)) +
               at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
    }

    bool last_row_canonical() const {
        return at(3, 0) == 0.0 && at(3, 1) == 0.0 && at(3, 2) == 0.0 && at(3, 3) == 1.0;
    }

    bool operator==(const Affine& o) const { return m == o.m; }
};

inline bool affine_close(const Affine& a, const Affine& b, double tol = 1e-4) {
    for (std::size_t i = 0; i < 16; ++i)
        if (std::fabs(a.m[i] - b.m[i]) > tol) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Volume
// ---------------------------------------------------------------------------

enum class DType : std::uint8_t { uint8, int16, float32, float64 };

inline std::size_t dtype_size(DType d) {
    switch (d) {
        case DType::uint8: return 1;
        case DType::int16: return 2;
        case DType::float32: return 4;
        case DType::float64: return 8;
    }
    return 0;
}

inline const char* dtype_name(DType d) {
    switch (d) {
        case DType::uint8: return "uint8";
        case DType::int16: return "int16";
        case DType::float32: return "float32";
        case DType::float64: return "float64";
    }
    return "?";
}

// 3D scalar grid. Sample data lives in x-fastest order; values are held as
// float64 in memory regardless of the on-disk dtype.
struct Volume {
    std::array<std::size_t, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    Affine affine = Affine::identity();
    DType dtype = DType::float64;
    std::vector<double> data;

    Volume() = default;
    Volume(std::size_t nx, std::size_t ny, std::size_t nz, DType dt = DType::float64,
           double fill = 0.0)
        : dims{nx, ny, nz}, dtype(dt), data(nx * ny * nz, fill) {}

    std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
    std::size_t nx() const { return dims[0]; }
    std::size_t ny() const { return dims[1]; }
    std::size_t nz() const { return dims[2]; }

    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
        return x + dims[0] * (y + dims[1] * z);
    }
    double& at(std::size_t x, std::size_t y, std::size_t z) { return data[index(x, y, z)]; }
    double at(std::size_t x, std::size_t y, std::size_t z) const { return data[index(x, y, z)]; }

    double voxel_volume_mm3() const { return spacing[0] * spacing[1] * spacing[2]; }

    void validate() const {
        if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0)
            throw domain_error("volume: zero-sized dimension");
        if (data.size() != size())
            throw domain_error("volume: data length " + std::to_string(data.size()) +
                               " does not match dims product " + std::to_string(size()));
        for (double s : spacing)
            if (!(s > 0.0)) throw domain_error("volume: non-positive spacing");
        if (!affine.last_row_canonical())
            throw domain_error("volume: affine last row must be (0,0,0,1)");
    }

    bool operator==(const Volume& o) const {
        return dims == o.dims && spacing == o.spacing && affine == o.affine && dtype == o.dtype &&
               data == o.data;
    }
};

inline bool same_geometry(const Volume& a, const Volume& b, double tol = 1e-4) {
    if (a.dims != b.dims) return false;
    for (int i = 0; i < 3; ++i)
        if (std::fabs(a.spacing[static_cast<std::size_t>(i)] -
                      b.spacing[static_cast<std::size_t>(i)]) > tol)
            return false;
    return affine_close(a.affine, b.affine, tol);
}

inline void require_same_geometry(const Volume& a, const Volume& b, const char* what) {
    if (!same_geometry(a, b)) throw shape_error(std::string(what) + ": geometry mismatch");
}

// Checks values are exactly 0/1.
inline void require_binary(const Volume& v, const char* what) {
    for (double x : v.data)
        if (x != 0.0 && x != 1.0)
            throw domain_error(std::string(what) + ": mask is not binary");
}

// ---------------------------------------------------------------------------
// LabelVolume
// ---------------------------------------------------------------------------

// Integer region labels on the same grid convention as Volume. Label 0 is
// background and never carries a name.
struct LabelVolume {
    std::array<std::size_t, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    Affine affine = Affine::identity();
    std::vector<std::int32_t> data;
    std::map<std::int32_t, std::string> label_names;

    std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
        return x + dims[0] * (y + dims[1] * z);
    }
    std::int32_t at(std::size_t x, std::size_t y, std::size_t z) const {
        return data[index(x, y, z)];
    }

    void validate() const {
        if (data.size() != size()) throw domain_error("label volume: data length mismatch");
        for (auto v : data)
            if (v < 0) throw domain_error("label volume: negative label");
        if (label_names.count(0)) throw domain_error("label volume: label 0 is reserved");
    }

    std::string name_of(std::int32_t id) const {
        auto it = label_names.find(id);
        if (it != label_names.end()) return it->second;
        return "region_" + std::to_string(id);
    }

    Volume to_volume() const {
        Volume v(dims[0], dims[1], dims[2], DType::int16);
        v.spacing = spacing;
        v.affine = affine;
        for (std::size_t i = 0; i < data.size(); ++i) v.data[i] = static_cast<double>(data[i]);
        return v;
    }

    static LabelVolume from_volume(const Volume& v,
                                   std::map<std::int32_t, std::string> names = {}) {
        LabelVolume lv;
        lv.dims = v.dims;
        lv.spacing = v.spacing;
        lv.affine = v.affine;
        lv.data.resize(v.data.size());
        for (std::size_t i = 0; i < v.data.size(); ++i) {
            const double x = v.data[i];
            if (x < 0.0 || x != std::floor(x))
                throw domain_error("label volume: non-integral or negative value");
            lv.data[i] = static_cast<std::int32_t>(x);
        }
        lv.label_names = std::move(names);
        return lv;
    }
};

inline bool same_geometry(const Volume& a, const LabelVolume& b, double tol = 1e-4) {
    Volume probe;
    probe.dims = b.dims;
    probe.spacing = b.spacing;
    probe.affine = b.affine;
    probe.data.resize(b.size());
    return a.dims == b.dims && same_geometry(a, probe, tol);
}

} // namespace epvs
