#include "mhgs/ply.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace mhgs {

namespace {

constexpr int kFloatsPerSplat = 14;

const char* const kPropertyNames[kFloatsPerSplat] = {
    "x", "y", "z", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1",
    "rot_2", "rot_3", "red", "green", "blue", "opacity"};

std::string ply_header(std::size_t count) {
    std::ostringstream head;
    head << "ply\nformat binary_little_endian 1.0\n"
         << "element vertex " << count << "\n";
    for (const char* name : kPropertyNames) head << "property float " << name << "\n";
    head << "end_header\n";
    return head.str();
}

void pack_splat(const GaussianSplat& s, float* out) {
    out[0] = static_cast<float>(s.position.x());
    out[1] = static_cast<float>(s.position.y());
    out[2] = static_cast<float>(s.position.z());
    out[3] = static_cast<float>(s.raw_scale.x());
    out[4] = static_cast<float>(s.raw_scale.y());
    out[5] = static_cast<float>(s.raw_scale.z());
    out[6] = static_cast<float>(s.rotation.w());
    out[7] = static_cast<float>(s.rotation.x());
    out[8] = static_cast<float>(s.rotation.y());
    out[9] = static_cast<float>(s.rotation.z());
    out[10] = static_cast<float>(s.color.x());
    out[11] = static_cast<float>(s.color.y());
    out[12] = static_cast<float>(s.color.z());
    out[13] = static_cast<float>(s.raw_opacity);
}

GaussianSplat unpack_splat(const float* in) {
    GaussianSplat s;
    s.position = Vec3(in[0], in[1], in[2]);
    s.raw_scale = Vec3(in[3], in[4], in[5]);
    s.rotation = Quat(in[6], in[7], in[8], in[9]);
    s.color = Vec3(in[10], in[11], in[12]);
    s.raw_opacity = in[13];
    return s;
}

}  // namespace

void save_ply(const GaussianCloud& cloud, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("save_ply: cannot open " + path.string());
    const std::string header = ply_header(cloud.size());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::vector<float> record(kFloatsPerSplat);
    for (const auto& s : cloud.splats) {
        pack_splat(s, record.data());
        out.write(reinterpret_cast<const char*>(record.data()),
                  kFloatsPerSplat * sizeof(float));
    }
    if (!out) throw io_error("save_ply: write failed for " + path.string());
}

GaussianCloud load_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("load_ply: cannot open " + path.string());

    std::string line;
    std::getline(in, line);
    if (line != "ply") throw io_error("load_ply: missing ply magic in " + path.string());
    std::getline(in, line);
    if (line != "format binary_little_endian 1.0")
        throw io_error("load_ply: unsupported format in " + path.string());

    std::size_t count = 0;
    int property_index = 0;
    while (std::getline(in, line)) {
        if (line == "end_header") break;
        std::istringstream fields(line);
        std::string token;
        fields >> token;
        if (token == "comment") continue;
        if (token == "element") {
            std::string name;
            fields >> name >> count;
            if (name != "vertex") throw io_error("load_ply: unexpected element " + name);
        } else if (token == "property") {
            std::string type, name;
            fields >> type >> name;
            if (property_index >= kFloatsPerSplat || type != "float" ||
                name != kPropertyNames[property_index])
                throw io_error("load_ply: unexpected property layout at '" + line + "'");
            ++property_index;
        }
    }
    if (property_index != kFloatsPerSplat)
        throw io_error("load_ply: wrong property count in " + path.string());

    GaussianCloud cloud;
    cloud.splats.reserve(count);
    std::vector<float> record(kFloatsPerSplat);
    for (std::size_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(record.data()), kFloatsPerSplat * sizeof(float));
        if (!in) throw io_error("load_ply: truncated vertex data in " + path.string());
        cloud.splats.push_back(unpack_splat(record.data()));
    }
    return cloud;
}

std::size_t ply_storage_bytes(const GaussianCloud& cloud) {
    return ply_header(cloud.size()).size() + cloud.size() * kFloatsPerSplat * sizeof(float);
}

}  // namespace mhgs
