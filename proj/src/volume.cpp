#include "lineamorph/volume.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "container.hpp"

namespace lineamorph {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::InvalidMask: return "InvalidMask";
        case ErrorCode::InvalidLandmarks: return "InvalidLandmarks";
        case ErrorCode::EmptyIntersection: return "EmptyIntersection";
        case ErrorCode::EmptySlice: return "EmptySlice";
        case ErrorCode::TooFewSlices: return "TooFewSlices";
        case ErrorCode::DimsMismatch: return "DimsMismatch";
        case ErrorCode::FragmentedMidline: return "FragmentedMidline";
        case ErrorCode::DegenerateCurve: return "DegenerateCurve";
        case ErrorCode::DegenerateChord: return "DegenerateChord";
        case ErrorCode::EmptyCrossSection: return "EmptyCrossSection";
        case ErrorCode::NoMeasurableSlices: return "NoMeasurableSlices";
        case ErrorCode::TooFewMeasured: return "TooFewMeasured";
        case ErrorCode::CurveProfileMismatch: return "CurveProfileMismatch";
        case ErrorCode::LandmarkOutOfRange: return "LandmarkOutOfRange";
        case ErrorCode::EmptySample: return "EmptySample";
        case ErrorCode::SampleTooSmall: return "SampleTooSmall";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::TooFewGroups: return "TooFewGroups";
        case ErrorCode::UnderAge: return "UnderAge";
        case ErrorCode::InvalidSubject: return "InvalidSubject";
        case ErrorCode::EmptyGroup: return "EmptyGroup";
        case ErrorCode::MissingVariable: return "MissingVariable";
        case ErrorCode::SpecInvalid: return "SpecInvalid";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

namespace {

void check_geometry(Dims dims, Vec3 spacing) {
    if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) {
        throw Error(ErrorCode::InvalidMask, "mask dims must all be >= 1");
    }
    if (!(spacing.x > 0.0) || !(spacing.y > 0.0) || !(spacing.z > 0.0) ||
        !std::isfinite(spacing.x) || !std::isfinite(spacing.y) || !std::isfinite(spacing.z)) {
        throw Error(ErrorCode::InvalidMask, "mask spacing must be finite and > 0");
    }
}

}  // namespace

VoxelMask::VoxelMask(Dims dims, Vec3 spacing, Vec3 origin)
    : dims_(dims), spacing_(spacing), origin_(origin) {
    check_geometry(dims, spacing);
    data_.assign(dims.count(), 0);
}

VoxelMask::VoxelMask(Dims dims, Vec3 spacing, Vec3 origin, std::vector<std::uint8_t> data)
    : dims_(dims), spacing_(spacing), origin_(origin), data_(std::move(data)) {
    check_geometry(dims, spacing);
    if (data_.size() != dims.count()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "payload holds " + std::to_string(data_.size()) + " voxels, header declares " +
                        std::to_string(dims.count()));
    }
    if (std::any_of(data_.begin(), data_.end(), [](std::uint8_t b) { return b > 1; })) {
        throw Error(ErrorCode::InvalidMask, "mask bytes must be 0 or 1");
    }
}

std::size_t VoxelMask::occupied_count() const {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

bool VoxelMask::slice_empty(int k) const {
    const std::size_t n = static_cast<std::size_t>(dims_.nx) * static_cast<std::size_t>(dims_.ny);
    const auto first = data_.begin() + static_cast<std::ptrdiff_t>(n * static_cast<std::size_t>(k));
    return std::none_of(first, first + static_cast<std::ptrdiff_t>(n),
                        [](std::uint8_t b) { return b != 0; });
}

std::optional<Bounds3> occupied_bounds(const VoxelMask& mask) {
    const Dims d = mask.dims();
    Bounds3 b{{d.nx, d.ny, d.nz}, {-1, -1, -1}};
    const auto data = mask.data();
    std::size_t idx = 0;
    for (int k = 0; k < d.nz; ++k) {
        for (int j = 0; j < d.ny; ++j) {
            for (int i = 0; i < d.nx; ++i, ++idx) {
                if (data[idx] == 0) continue;
                b.lo = {std::min(b.lo.i, i), std::min(b.lo.j, j), std::min(b.lo.k, k)};
                b.hi = {std::max(b.hi.i, i), std::max(b.hi.j, j), std::max(b.hi.k, k)};
            }
        }
    }
    if (b.hi.i < 0) return std::nullopt;
    return b;
}

LocalFrame LocalFrame::of(const VoxelMask& mask) {
    const auto b = occupied_bounds(mask);
    return LocalFrame{mask.origin(), mask.spacing(), b ? b->lo : Index3{}};
}

std::size_t PlaneImage::occupied_count() const {
    return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

PlaneImage axial_slice(const VoxelMask& mask, int k) {
    if (k < 0 || k >= mask.dims().nz) {
        throw Error(ErrorCode::InvalidMask, "slice index " + std::to_string(k) + " out of range");
    }
    PlaneImage img;
    img.nu = mask.dims().nx;
    img.nv = mask.dims().ny;
    img.su = mask.spacing().x;
    img.sv = mask.spacing().y;
    img.frame_origin = mask.position(0, 0, k);
    img.axis_u = {1.0, 0.0, 0.0};
    img.axis_v = {0.0, 1.0, 0.0};
    const std::size_t n = static_cast<std::size_t>(img.nu) * static_cast<std::size_t>(img.nv);
    const auto data = mask.data().subspan(n * static_cast<std::size_t>(k), n);
    img.data.assign(data.begin(), data.end());
    return img;
}

int median_sagittal_column(const VoxelMask& mask, const LandmarkSet& landmarks) {
    // Computed in the anchored frame so the chosen column moves with the scene.
    const LocalFrame frame = LocalFrame::of(mask);
    const double x_mean = (frame.to_local(landmarks.xiphoid).x + frame.to_local(landmarks.umbilicus).x +
                           frame.to_local(landmarks.pubis).x) /
                          3.0;
    return static_cast<int>(std::lround(x_mean / mask.spacing().x)) + frame.anchor.i;
}

PlaneImage median_sagittal_slice(const VoxelMask& mask, const LandmarkSet& landmarks) {
    const int column = median_sagittal_column(mask, landmarks);
    const Dims d = mask.dims();
    if (column < 0 || column >= d.nx) {
        throw Error(ErrorCode::EmptyIntersection,
                    "median sagittal plane lies outside the volume", "median_sagittal_slice");
    }
    PlaneImage img;
    img.nu = d.ny;
    img.nv = d.nz;
    img.su = mask.spacing().y;
    img.sv = mask.spacing().z;
    img.frame_origin = mask.position(column, 0, 0);
    img.data.resize(static_cast<std::size_t>(d.ny) * static_cast<std::size_t>(d.nz));
    std::size_t occupied = 0;
    for (int k = 0; k < d.nz; ++k) {
        for (int j = 0; j < d.ny; ++j) {
            const bool v = mask.at(column, j, k);
            img.data[static_cast<std::size_t>(k) * static_cast<std::size_t>(d.ny) +
                     static_cast<std::size_t>(j)] = v ? 1 : 0;
            occupied += v ? 1 : 0;
        }
    }
    if (occupied == 0) {
        throw Error(ErrorCode::EmptyIntersection,
                    "median sagittal plane (column " + std::to_string(column) +
                        ") misses every occupied voxel",
                    "median_sagittal_slice");
    }
    return img;
}

std::size_t count_components(const VoxelMask& mask) {
    const Dims d = mask.dims();
    std::vector<std::uint8_t> seen(d.count(), 0);
    std::vector<Index3> stack;
    std::size_t components = 0;
    for (int k = 0; k < d.nz; ++k) {
        for (int j = 0; j < d.ny; ++j) {
            for (int i = 0; i < d.nx; ++i) {
                const std::size_t idx = mask.index(i, j, k);
                if (!mask.data()[idx] || seen[idx]) continue;
                ++components;
                seen[idx] = 1;
                stack.push_back({i, j, k});
                while (!stack.empty()) {
                    const Index3 p = stack.back();
                    stack.pop_back();
                    for (int dk = -1; dk <= 1; ++dk) {
                        for (int dj = -1; dj <= 1; ++dj) {
                            for (int di = -1; di <= 1; ++di) {
                                const int a = p.i + di, b = p.j + dj, c = p.k + dk;
                                if (!mask.contains(a, b, c)) continue;
                                const std::size_t n = mask.index(a, b, c);
                                if (mask.data()[n] && !seen[n]) {
                                    seen[n] = 1;
                                    stack.push_back({a, b, c});
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return components;
}

namespace {

bool inside_box(const VoxelMask& mask, Vec3 p) {
    const Vec3 lo = mask.position(0, 0, 0) - 0.5 * mask.spacing();
    const Dims d = mask.dims();
    const Vec3 hi = mask.position(d.nx - 1, d.ny - 1, d.nz - 1) + 0.5 * mask.spacing();
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
}

std::vector<ValidationIssue> landmark_issues(const VoxelMask& mask, const LandmarkSet& lm) {
    std::vector<ValidationIssue> issues;
    if (!(lm.xiphoid.z > lm.umbilicus.z && lm.umbilicus.z > lm.pubis.z)) {
        issues.push_back({"LANDMARK_ORDER",
                          "landmarks must satisfy xiphoid.z > umbilicus.z > pubis.z",
                          Severity::Error});
    }
    const std::array<std::pair<const char*, Vec3>, 3> named{
        {{"xiphoid", lm.xiphoid}, {"umbilicus", lm.umbilicus}, {"pubis", lm.pubis}}};
    for (const auto& [name, p] : named) {
        if (!inside_box(mask, p)) {
            issues.push_back({"LANDMARK_OUT_OF_BOUNDS",
                              std::string(name) + " landmark lies outside the volume",
                              Severity::Error});
        }
    }
    return issues;
}

}  // namespace

void check_landmarks(const VoxelMask& mask, const LandmarkSet& landmarks) {
    const auto issues = landmark_issues(mask, landmarks);
    if (!issues.empty()) throw Error(ErrorCode::InvalidLandmarks, issues.front().message);
}

ValidationReport validate_mask(const VoxelMask& mask, const LandmarkSet& landmarks) {
    ValidationReport report;
    report.issues = landmark_issues(mask, landmarks);
    report.occupied_voxel_count = mask.occupied_count();
    if (report.occupied_voxel_count == 0) {
        report.issues.push_back({"EMPTY_MASK", "mask has no occupied voxel", Severity::Error});
    } else {
        report.connected_component_count = count_components(mask);
        if (report.connected_component_count > 1) {
            report.issues.push_back(
                {"MULTIPLE_COMPONENTS",
                 std::to_string(report.connected_component_count) +
                     " disconnected components (umbilical defect or delineation gap?)",
                 Severity::Info});
        }
    }
    report.ok = std::none_of(report.issues.begin(), report.issues.end(),
                             [](const ValidationIssue& i) { return i.severity == Severity::Error; });
    return report;
}

// ---------------------------------------------------------------------------

namespace detail {

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

json parse_strict_json(const std::string& text, const std::string& what) {
    std::vector<std::set<std::string>> keys;
    std::string duplicate;
    auto cb = [&](int /*depth*/, json::parse_event_t event, json& parsed) {
        switch (event) {
            case json::parse_event_t::object_start: keys.emplace_back(); break;
            case json::parse_event_t::object_end: keys.pop_back(); break;
            case json::parse_event_t::key: {
                const auto& k = parsed.get_ref<const std::string&>();
                if (!keys.back().insert(k).second && duplicate.empty()) duplicate = k;
                break;
            }
            default: break;
        }
        return true;
    };
    json j;
    try {
        j = json::parse(text, cb);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedHeader, what + ": invalid JSON (" + e.what() + ")");
    }
    if (!duplicate.empty()) {
        throw Error(ErrorCode::MalformedHeader, what + ": duplicate key '" + duplicate + "'");
    }
    return j;
}

namespace {

template <typename T>
std::array<T, 3> triple(const json& h, const char* key, const std::string& what) {
    if (!h.contains(key)) throw Error(ErrorCode::MalformedHeader, what + ": missing key '" + key + "'");
    const json& v = h.at(key);
    if (!v.is_array() || v.size() != 3) {
        throw Error(ErrorCode::MalformedHeader, what + ": '" + key + "' must be a 3-element array");
    }
    std::array<T, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        if constexpr (std::is_integral_v<T>) {
            if (!v[i].is_number_integer()) {
                throw Error(ErrorCode::MalformedHeader, what + ": '" + key + "' must hold integers");
            }
        } else if (!v[i].is_number()) {
            throw Error(ErrorCode::MalformedHeader, what + ": '" + key + "' must hold numbers");
        }
        out[i] = v[i].get<T>();
    }
    return out;
}

}  // namespace

LoadedContainer load_container(const fs::path& header_path) {
    const std::string what = header_path.string();
    json h = parse_strict_json(read_text_file(header_path), what);
    if (!h.is_object()) throw Error(ErrorCode::MalformedHeader, what + ": header is not an object");

    const auto dims = triple<long long>(h, "dims", what);
    const auto spacing = triple<double>(h, "spacing_mm", what);
    const auto origin = triple<double>(h, "origin_mm", what);
    if (!h.contains("data_file") || !h["data_file"].is_string()) {
        throw Error(ErrorCode::MalformedHeader, what + ": missing key 'data_file'");
    }
    if (!h.contains("encoding") || !h["encoding"].is_string()) {
        throw Error(ErrorCode::MalformedHeader, what + ": missing key 'encoding'");
    }
    if (h["encoding"].get<std::string>() != "raw_u8") {
        throw Error(ErrorCode::UnsupportedEncoding,
                    what + ": encoding '" + h["encoding"].get<std::string>() + "' is not raw_u8");
    }
    for (long long n : dims) {
        if (n < 1 || n > (1LL << 20)) {
            throw Error(ErrorCode::MalformedHeader, what + ": dims out of range");
        }
    }
    const Dims d{static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2])};

    const fs::path payload = header_path.parent_path() / h["data_file"].get<std::string>();
    std::ifstream in(payload, std::ios::binary | std::ios::ate);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open payload " + payload.string());
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::vector<std::uint8_t> bytes(size);
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
        throw Error(ErrorCode::IoFailure, "cannot read payload " + payload.string());
    }
    if (bytes.size() != d.count()) {
        throw Error(ErrorCode::DimensionMismatch,
                    payload.string() + ": payload has " + std::to_string(bytes.size()) +
                        " bytes, expected " + std::to_string(d.count()));
    }
    if (std::any_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b > 1; })) {
        throw Error(ErrorCode::UnsupportedEncoding, payload.string() + ": payload bytes must be 0 or 1");
    }
    try {
        return {VoxelMask(d, {spacing[0], spacing[1], spacing[2]}, {origin[0], origin[1], origin[2]},
                          std::move(bytes)),
                std::move(h)};
    } catch (const Error& e) {
        throw Error(ErrorCode::MalformedHeader, what + ": " + e.what());
    }
}

void save_container(const VoxelMask& mask, const fs::path& header_path, const json& extra) {
    fs::path payload = header_path;
    payload.replace_extension(".raw");
    json h = extra.is_object() ? extra : json::object();
    const Dims d = mask.dims();
    h["dims"] = {d.nx, d.ny, d.nz};
    h["spacing_mm"] = {mask.spacing().x, mask.spacing().y, mask.spacing().z};
    h["origin_mm"] = {mask.origin().x, mask.origin().y, mask.origin().z};
    h["data_file"] = payload.filename().string();
    h["encoding"] = "raw_u8";

    std::ofstream out(payload, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + payload.string());
    const auto data = mask.data();
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    out.close();
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + payload.string());
    write_text_file(header_path, h.dump(2) + "\n");
}

}  // namespace detail

VoxelMask load_mask(const fs::path& header_path) {
    return detail::load_container(header_path).mask;
}

void save_mask(const VoxelMask& mask, const fs::path& header_path) {
    detail::save_container(mask, header_path);
}

LandmarkSet load_landmarks(const fs::path& path) {
    const std::string what = path.string();
    const json j = detail::parse_strict_json(detail::read_text_file(path), what);
    auto point = [&](const char* key) {
        const auto v = detail::triple<double>(j, key, what);
        return Vec3{v[0], v[1], v[2]};
    };
    return {point("xiphoid_mm"), point("umbilicus_mm"), point("pubis_mm")};
}

void save_landmarks(const LandmarkSet& lm, const fs::path& path) {
    json j;
    j["xiphoid_mm"] = {lm.xiphoid.x, lm.xiphoid.y, lm.xiphoid.z};
    j["umbilicus_mm"] = {lm.umbilicus.x, lm.umbilicus.y, lm.umbilicus.z};
    j["pubis_mm"] = {lm.pubis.x, lm.pubis.y, lm.pubis.z};
    detail::write_text_file(path, j.dump(2) + "\n");
}

}  // namespace lineamorph
