#include "grrecon/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace grrecon {
namespace {

using nlohmann::json;

std::string strip_extension(const std::string& base) {
    if (base.size() > 5 && base.substr(base.size() - 5) == ".json")
        return base.substr(0, base.size() - 5);
    if (base.size() > 4 && base.substr(base.size() - 4) == ".raw")
        return base.substr(0, base.size() - 4);
    return base;
}

void write_raw_f32(const std::string& path, const std::vector<float>& data) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("io: cannot open for writing: " + path);
    static_assert(sizeof(float) == 4);
    if constexpr (std::endian::native == std::endian::little) {
        f.write(reinterpret_cast<const char*>(data.data()),
                static_cast<std::streamsize>(data.size() * 4));
    } else {
        for (float v : data) {
            std::uint32_t u;
            std::memcpy(&u, &v, 4);
            const char bytes[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                                   static_cast<char>((u >> 16) & 0xff),
                                   static_cast<char>((u >> 24) & 0xff)};
            f.write(bytes, 4);
        }
    }
    if (!f)
        throw std::runtime_error("io: write failed: " + path);
}

std::vector<float> read_raw_f32(const std::string& path, std::size_t expected_count) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f)
        throw std::runtime_error("io: cannot open for reading: " + path);
    const auto bytes = static_cast<std::size_t>(f.tellg());
    if (bytes != expected_count * 4)
        throw std::runtime_error("io: payload length mismatch in " + path + ": expected " +
                                 std::to_string(expected_count * 4) + " bytes, found " +
                                 std::to_string(bytes));
    f.seekg(0);
    std::vector<float> data(expected_count);
    if constexpr (std::endian::native == std::endian::little) {
        f.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
    } else {
        for (auto& v : data) {
            unsigned char b[4];
            f.read(reinterpret_cast<char*>(b), 4);
            const std::uint32_t u = static_cast<std::uint32_t>(b[0]) |
                                    (static_cast<std::uint32_t>(b[1]) << 8) |
                                    (static_cast<std::uint32_t>(b[2]) << 16) |
                                    (static_cast<std::uint32_t>(b[3]) << 24);
            std::memcpy(&v, &u, 4);
        }
    }
    if (!f)
        throw std::runtime_error("io: read failed: " + path);
    return data;
}

json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw std::runtime_error("io: cannot open for reading: " + path);
    json j;
    f >> j;
    return j;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f)
        throw std::runtime_error("io: cannot open for writing: " + path);
    f << j.dump(2) << "\n";
}

void check_dtype(const json& j, const std::string& path) {
    const std::string dtype = j.value("dtype", "f32le");
    if (dtype != "f32le")
        throw std::runtime_error("io: unknown dtype tag '" + dtype + "' in " + path);
}

}  // namespace

void write_volume(const std::string& base_in, const Volume& volume) {
    volume.validate();
    const std::string base = strip_extension(base_in);
    json j;
    j["dims"] = volume.grid.dims;
    j["voxel_size_mm"] = volume.grid.voxel_size;
    j["origin_mm"] = volume.grid.origin;
    j["dtype"] = "f32le";
    j["order"] = "x-fastest";
    write_json(base + ".json", j);
    write_raw_f32(base + ".raw", volume.data);
}

Volume read_volume(const std::string& base_in) {
    const std::string base = strip_extension(base_in);
    const json j = read_json(base + ".json");
    check_dtype(j, base + ".json");
    Grid g;
    j.at("dims").get_to(g.dims);
    j.at("voxel_size_mm").get_to(g.voxel_size);
    j.at("origin_mm").get_to(g.origin);
    g.validate();
    Volume v;
    v.grid = g;
    v.data = read_raw_f32(base + ".raw", g.voxel_count());
    return v;
}

void write_sinogram(const std::string& base_in, const Sinogram& sino) {
    sino.validate();
    const std::string base = strip_extension(base_in);
    json j;
    j["n_angles"] = sino.n_angles;
    j["n_det"] = sino.n_det;
    j["n_slices"] = sino.n_slices;
    j["angles_rad"] = sino.angles;
    j["det_spacing_mm"] = sino.det_spacing;
    j["dtype"] = "f32le";
    j["order"] = "det-fastest,angle,slice";
    write_json(base + ".json", j);
    write_raw_f32(base + ".raw", sino.data);
}

Sinogram read_sinogram(const std::string& base_in) {
    const std::string base = strip_extension(base_in);
    const json j = read_json(base + ".json");
    check_dtype(j, base + ".json");
    Sinogram s;
    s.n_angles = j.at("n_angles").get<int>();
    s.n_det = j.at("n_det").get<int>();
    s.n_slices = j.at("n_slices").get<int>();
    j.at("angles_rad").get_to(s.angles);
    s.det_spacing = j.at("det_spacing_mm").get<double>();
    s.data = read_raw_f32(base + ".raw", static_cast<std::size_t>(s.n_angles) * s.n_det * s.n_slices);
    s.validate();
    return s;
}

void write_cloud(const std::string& base_in, const GaussianCloud& cloud) {
    cloud.validate();
    const std::string base = strip_extension(base_in);
    json j;
    j["n"] = cloud.size();
    j["support_k"] = cloud.support_k;
    j["dtype"] = "f32le";
    write_json(base + ".json", j);

    std::vector<float> rows(cloud.size() * 5);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        rows[i * 5 + 0] = static_cast<float>(cloud.centers[i][0]);
        rows[i * 5 + 1] = static_cast<float>(cloud.centers[i][1]);
        rows[i * 5 + 2] = static_cast<float>(cloud.centers[i][2]);
        rows[i * 5 + 3] = static_cast<float>(cloud.sigma(i));
        rows[i * 5 + 4] = static_cast<float>(cloud.intensities[i]);
    }
    write_raw_f32(base + ".raw", rows);
}

GaussianCloud read_cloud(const std::string& base_in) {
    const std::string base = strip_extension(base_in);
    const json j = read_json(base + ".json");
    check_dtype(j, base + ".json");
    const auto n = j.at("n").get<std::size_t>();
    GaussianCloud cloud;
    cloud.support_k = j.at("support_k").get<int>();
    const auto rows = read_raw_f32(base + ".raw", n * 5);
    cloud.centers.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        cloud.push_back({rows[i * 5 + 0], rows[i * 5 + 1], rows[i * 5 + 2]}, rows[i * 5 + 3],
                        rows[i * 5 + 4]);
    }
    cloud.validate();
    return cloud;
}

void write_pgm(const std::string& path, const std::vector<float>& pixels, int width, int height) {
    if (pixels.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("write_pgm: pixel count does not match dimensions");
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (float v : pixels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const float range = hi > lo ? hi - lo : 1.0f;

    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("io: cannot open for writing: " + path);
    f << "P5\n" << width << " " << height << "\n255\n";
    for (float v : pixels) {
        const int g = static_cast<int>(std::lround(255.0f * (v - lo) / range));
        f.put(static_cast<char>(std::clamp(g, 0, 255)));
    }
    if (!f)
        throw std::runtime_error("io: write failed: " + path);
}

std::string metrics_csv_row(const std::string& label, const Metrics& m) {
    std::ostringstream os;
    os.precision(9);
    os << label << ",";
    if (std::isfinite(m.psnr))
        os << m.psnr;
    else
        os << "inf";
    os << "," << m.ssim << "," << m.mse;
    return os.str();
}

}  // namespace grrecon
