#pragma once
#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "epvs/error.hpp"
#include "epvs/volume.hpp"

namespace epvs {

// ---------------------------------------------------------------------------
// NIfTI-1 header
// ---------------------------------------------------------------------------

struct NiftiHeader {
    std::int32_t sizeof_hdr;    //   0
    char data_type[10];         //   4
    char db_name[18];           //  14
    std::int32_t extents;       //  32
    std::int16_t session_error; //  36
    char regular;               //  38
    char dim_info;              //  39
    std::int16_t dim[8];        //  40
    float intent_p1;            //  56
    float intent_p2;            //  60
    float intent_p3;            //  64
    std::int16_t intent_code;   //  68
    std::int16_t datatype;      //  70
    std::int16_t bitpix;        //  72
    std::int16_t slice_start;   //  74
    float pixdim[8];            //  76
    float vox_offset;           // 108
    float scl_slope;            // 112
    float scl_inter;            // 116
    std::int16_t slice_end;     // 120
    char slice_code;            // 122
    char xyzt_units;            // 123
    float cal_max;              // 124
    float cal_min;              // 128
    float slice_duration;       // 132
    float toffset;              // 136
    std::int32_t glmax;         // 140
    std::int32_t glmin;         // 144
    char descrip[80];           // 148
    char aux_file[24];          // 228
    std::int16_t qform_code;    // 252
    std::int16_t sform_code;    // 254
    float quatern_b;            // 256
    float quatern_c;            // 260
    float quatern_d;            // 264
    float qoffset_x;            // 268
    float qoffset_y;            // 272
    float qoffset_z;            // 276
    float srow_x[4];            // 280
    float srow_y[4];            // 296
    float srow_z[4];            // 312
    char intent_name[16];       // 328
    char magic[4];              // 344
};
static_assert(sizeof(NiftiHeader) == 348, "NIfTI-1 header must pack to 348 bytes");

namespace detail {

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtFloat64 = 64;

inline void bswap(std::int16_t& v) {
    v = static_cast<std::int16_t>(__builtin_bswap16(static_cast<std::uint16_t>(v)));
}
inline void bswap(std::int32_t& v) {
    v = static_cast<std::int32_t>(__builtin_bswap32(static_cast<std::uint32_t>(v)));
}
inline void bswap(float& v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    u = __builtin_bswap32(u);
    std::memcpy(&v, &u, 4);
}

inline void bswap_header(NiftiHeader& h) {
    bswap(h.sizeof_hdr);
    bswap(h.extents);
    bswap(h.session_error);
    for (auto& d : h.dim) bswap(d);
    bswap(h.intent_p1);
    bswap(h.intent_p2);
    bswap(h.intent_p3);
    bswap(h.intent_code);
    bswap(h.datatype);
    bswap(h.bitpix);
    bswap(h.slice_start);
    for (auto& p : h.pixdim) bswap(p);
    bswap(h.vox_offset);
    bswap(h.scl_slope);
    bswap(h.scl_inter);
    bswap(h.slice_end);
    bswap(h.cal_max);
    bswap(h.cal_min);
    bswap(h.slice_duration);
    bswap(h.toffset);
    bswap(h.glmax);
    bswap(h.glmin);
    bswap(h.qform_code);
    bswap(h.sform_code);
    bswap(h.quatern_b);
    bswap(h.quatern_c);
    bswap(h.quatern_d);
    bswap(h.qoffset_x);
    bswap(h.qoffset_y);
    bswap(h.qoffset_z);
    for (auto& v : h.srow_x) bswap(v);
    for (auto& v : h.srow_y) bswap(v);
    for (auto& v : h.srow_z) bswap(v);
}

// gzread handles plain files transparently, so one path covers .nii and
// .nii.gz.
inline std::vector<unsigned char> slurp(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw io_error("cannot open " + path);
    std::vector<unsigned char> bytes;
    unsigned char chunk[1 << 20];
    int n;
    while ((n = gzread(f, chunk, sizeof(chunk))) > 0)
        bytes.insert(bytes.end(), chunk, chunk + n);
    if (n < 0) {
        int errnum = 0;
        const char* msg = gzerror(f, &errnum);
        std::string m = msg ? msg : "gz error";
        gzclose(f);
        throw io_error("read failed for " + path + ": " + m);
    }
    gzclose(f);
    return bytes;
}

inline void spew(const std::string& path, const std::vector<unsigned char>& bytes) {
    const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
    if (gz) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (!f) throw io_error("cannot open " + path + " for writing");
        std::size_t off = 0;
        while (off < bytes.size()) {
            const unsigned len =
                static_cast<unsigned>(std::min<std::size_t>(bytes.size() - off, 1u << 20));
            if (gzwrite(f, bytes.data() + off, len) != static_cast<int>(len)) {
                gzclose(f);
                throw io_error("write failed for " + path);
            }
            off += len;
        }
        if (gzclose(f) != Z_OK) throw io_error("close failed for " + path);
    } else {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw io_error("cannot open " + path + " for writing");
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
        if (!f) throw io_error("write failed for " + path);
    }
}

inline DType dtype_from_code(std::int16_t code) {
    switch (code) {
        case kDtUint8: return DType::uint8;
        case kDtInt16: return DType::int16;
        case kDtFloat32: return DType::float32;
        case kDtFloat64: return DType::float64;
        default:
            throw unsupported_dtype_error("unsupported NIfTI datatype code " +
                                          std::to_string(code));
    }
}

inline std::int16_t dtype_to_code(DType d) {
    switch (d) {
        case DType::uint8: return kDtUint8;
        case DType::int16: return kDtInt16;
        case DType::float32: return kDtFloat32;
        case DType::float64: return kDtFloat64;
    }
    throw unsupported_dtype_error("bad dtype");
}

template <typename T>
double decode_scalar(const unsigned char* p, bool swap) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if (swap && sizeof(T) > 1) {
        if constexpr (sizeof(T) == 2) {
            std::uint16_t u;
            std::memcpy(&u, &v, 2);
            u = __builtin_bswap16(u);
            std::memcpy(&v, &u, 2);
        } else if constexpr (sizeof(T) == 4) {
            std::uint32_t u;
            std::memcpy(&u, &v, 4);
            u = __builtin_bswap32(u);
            std::memcpy(&v, &u, 4);
        } else {
            std::uint64_t u;
            std::memcpy(&u, &v, 8);
            u = __builtin_bswap64(u);
            std::memcpy(&v, &u, 8);
        }
    }
    return static_cast<double>(v);
}

// Path of the companion .img for a detached "ni1" header.
inline std::string companion_img_path(const std::string& hdr_path) {
    namespace fs = std::filesystem;
    fs::path p(hdr_path);
    std::string stem = p.filename().string();
    const bool gz = stem.size() > 3 && stem.compare(stem.size() - 3, 3, ".gz") == 0;
    if (gz) stem.resize(stem.size() - 3);
    auto dot = stem.rfind('.');
    if (dot != std::string::npos) stem.resize(dot);
    fs::path dir = p.parent_path();
    for (const char* ext : {".img", ".img.gz"}) {
        fs::path cand = dir / (stem + ext);
        if (fs::exists(cand)) return cand.string();
    }
    throw io_error("companion .img not found for " + hdr_path);
}

} // namespace detail

// ---------------------------------------------------------------------------
// read / write
// ---------------------------------------------------------------------------

inline Volume read_nifti(const std::string& path) {
    using namespace detail;
    std::vector<unsigned char> bytes = slurp(path);
    if (bytes.size() < sizeof(NiftiHeader))
        throw truncation_error(path + ": shorter than a NIfTI-1 header");

    NiftiHeader h;
    std::memcpy(&h, bytes.data(), sizeof(h));
    const bool single = std::memcmp(h.magic, "n+1", 4) == 0;
    const bool paired = std::memcmp(h.magic, "ni1", 4) == 0;
    if (!single && !paired) throw format_error(path + ": bad NIfTI magic");

    bool swap = false;
    if (h.dim[0] < 1 || h.dim[0] > 7) {
        bswap_header(h);
        swap = true;
        if (h.dim[0] < 1 || h.dim[0] > 7)
            throw format_error(path + ": implausible dim[0] in either byte order");
    }

    const DType dt = dtype_from_code(h.datatype);
    const int ndim = h.dim[0];
    auto extent = [&](int i) -> std::size_t {
        if (i > ndim) return 1;
        return h.dim[i] > 0 ? static_cast<std::size_t>(h.dim[i]) : 1;
    };
    for (int i = 4; i <= ndim; ++i)
        if (extent(i) > 1) throw format_error(path + ": >3D volumes not supported");

    Volume v(extent(1), extent(2), extent(3), dt);
    for (int i = 0; i < 3; ++i) {
        const float p = h.pixdim[i + 1];
        v.spacing[static_cast<std::size_t>(i)] = p > 0.0f ? static_cast<double>(p) : 1.0;
    }

    if (h.sform_code > 0) {
        for (int c = 0; c < 4; ++c) {
            v.affine.at(0, c) = static_cast<double>(h.srow_x[c]);
            v.affine.at(1, c) = static_cast<double>(h.srow_y[c]);
            v.affine.at(2, c) = static_cast<double>(h.srow_z[c]);
        }
    } else if (h.qform_code > 0) {
        const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
        double a2 = 1.0 - (b * b + c * c + d * d);
        const double a = a2 > 0.0 ? std::sqrt(a2) : 0.0;
        const double qfac = h.pixdim[0] < 0.0f ? -1.0 : 1.0;
        const double sx = v.spacing[0], sy = v.spacing[1], sz = v.spacing[2] * qfac;
        v.affine.at(0, 0) = (a * a + b * b - c * c - d * d) * sx;
        v.affine.at(0, 1) = (2 * b * c - 2 * a * d) * sy;
        v.affine.at(0, 2) = (2 * b * d + 2 * a * c) * sz;
        v.affine.at(1, 0) = (2 * b * c + 2 * a * d) * sx;
        v.affine.at(1, 1) = (a * a + c * c - b * b - d * d) * sy;
        v.affine.at(1, 2) = (2 * c * d - 2 * a * b) * sz;
        v.affine.at(2, 0) = (2 * b * d - 2 * a * c) * sx;
        v.affine.at(2, 1) = (2 * c * d + 2 * a * b) * sy;
        v.affine.at(2, 2) = (a * a + d * d - b * b - c * c) * sz;
        v.affine.at(0, 3) = static_cast<double>(h.qoffset_x);
        v.affine.at(1, 3) = static_cast<double>(h.qoffset_y);
        v.affine.at(2, 3) = static_cast<double>(h.qoffset_z);
    } else {
        std::cerr << "epvs: " << path
                  << ": neither sform nor qform set; assuming spacing-scaled identity affine\n";
        v.affine = Affine::scaling(v.spacing[0], v.spacing[1], v.spacing[2]);
    }

    const unsigned char* payload = nullptr;
    std::size_t avail = 0;
    std::vector<unsigned char> img_bytes;
    if (single) {
        auto offset = static_cast<std::size_t>(h.vox_offset);
        if (offset < sizeof(NiftiHeader)) offset = sizeof(NiftiHeader);
        if (offset > bytes.size()) throw truncation_error(path + ": vox_offset past end of file");
        payload = bytes.data() + offset;
        avail = bytes.size() - offset;
    } else {
        img_bytes = slurp(companion_img_path(path));
        const auto offset = static_cast<std::size_t>(h.vox_offset > 0.0f ? h.vox_offset : 0.0f);
        if (offset > img_bytes.size())
            throw truncation_error(path + ": vox_offset past end of .img");
        payload = img_bytes.data() + offset;
        avail = img_bytes.size() - offset;
    }

    const std::size_t esize = dtype_size(dt);
    if (avail < v.size() * esize)
        throw truncation_error(path + ": payload truncated (" + std::to_string(avail) +
                               " bytes for " + std::to_string(v.size() * esize) + ")");

    for (std::size_t i = 0; i < v.size(); ++i) {
        const unsigned char* p = payload + i * esize;
        switch (dt) {
            case DType::uint8: v.data[i] = decode_scalar<std::uint8_t>(p, swap); break;
            case DType::int16: v.data[i] = decode_scalar<std::int16_t>(p, swap); break;
            case DType::float32: v.data[i] = decode_scalar<float>(p, swap); break;
            case DType::float64: v.data[i] = decode_scalar<double>(p, swap); break;
        }
    }

    if (h.scl_slope != 0.0f && !(h.scl_slope == 1.0f && h.scl_inter == 0.0f)) {
        const double s = static_cast<double>(h.scl_slope);
        const double b = static_cast<double>(h.scl_inter);
        for (auto& x : v.data) x = s * x + b;
    }
    return v;
}

// Writes a little-endian single-file NIfTI-1 (.nii / .nii.gz by extension),
// sform only, no scaling, no extensions.
inline void write_nifti(const Volume& v, const std::string& path) {
    using namespace detail;
    v.validate();
    for (std::size_t i = 0; i < 3; ++i)
        if (v.dims[i] > 32767) throw domain_error("write_nifti: dimension exceeds int16 range");

    NiftiHeader h;
    std::memset(&h, 0, sizeof(h));
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    h.dim[1] = static_cast<std::int16_t>(v.dims[0]);
    h.dim[2] = static_cast<std::int16_t>(v.dims[1]);
    h.dim[3] = static_cast<std::int16_t>(v.dims[2]);
    for (int i = 4; i < 8; ++i) h.dim[i] = 1;
    h.datatype = dtype_to_code(v.dtype);
    h.bitpix = static_cast<std::int16_t>(dtype_size(v.dtype) * 8);
    h.pixdim[0] = 1.0f;
    for (int i = 0; i < 3; ++i)
        h.pixdim[i + 1] = static_cast<float>(v.spacing[static_cast<std::size_t>(i)]);
    h.vox_offset = 352.0f;
    h.scl_slope = 0.0f;
    h.scl_inter = 0.0f;
    h.sform_code = 1;
    h.qform_code = 0;
    for (int c = 0; c < 4; ++c) {
        h.srow_x[c] = static_cast<float>(v.affine.at(0, c));
        h.srow_y[c] = static_cast<float>(v.affine.at(1, c));
        h.srow_z[c] = static_cast<float>(v.affine.at(2, c));
    }
    std::strncpy(h.descrip, "epvskit", sizeof(h.descrip) - 1);
    std::memcpy(h.magic, "n+1", 4);

    std::vector<unsigned char> bytes(352 + v.size() * dtype_size(v.dtype), 0);
    std::memcpy(bytes.data(), &h, sizeof(h));
    unsigned char* out = bytes.data() + 352;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = v.data[i];
        switch (v.dtype) {
            case DType::uint8: {
                auto u = static_cast<std::uint8_t>(std::llround(x));
                std::memcpy(out, &u, 1);
                out += 1;
                break;
            }
            case DType::int16: {
                auto s = static_cast<std::int16_t>(std::llround(x));
                std::memcpy(out, &s, 2);
                out += 2;
                break;
            }
            case DType::float32: {
                auto f = static_cast<float>(x);
                std::memcpy(out, &f, 4);
                out += 4;
                break;
            }
            case DType::float64: {
                std::memcpy(out, &x, 8);
                out += 8;
                break;
            }
        }
    }
    spew(path, bytes);
}

} // namespace epvs
