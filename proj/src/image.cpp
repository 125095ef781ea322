#include "mhgs/image.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mhgs {

PixelMap l1_map(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_resolution(b)) throw contract_error("l1_map: resolution mismatch");
    PixelMap out = PixelMap::Zero(a.height, a.width);
    for (int c = 0; c < 3; ++c) out += (a.ch[c] - b.ch[c]).abs();
    return out / 3.0;
}

Scalar mean_abs_error(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_resolution(b)) throw contract_error("mean_abs_error: resolution mismatch");
    Scalar sum = 0.0;
    for (int c = 0; c < 3; ++c) sum += (a.ch[c] - b.ch[c]).abs().sum();
    return sum / (3.0 * a.width * a.height);
}

Scalar mean_squared_error(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_resolution(b)) throw contract_error("mean_squared_error: resolution mismatch");
    Scalar sum = 0.0;
    for (int c = 0; c < 3; ++c) sum += (a.ch[c] - b.ch[c]).square().sum();
    return sum / (3.0 * a.width * a.height);
}

void write_ppm(const ImageBuffer& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("write_ppm: cannot open " + path.string());
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(image.width) * 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const Scalar v = clamp01(image.ch[c](y, x));
                row[3 * x + c] = static_cast<unsigned char>(std::lround(v * 255.0));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw io_error("write_ppm: write failed for " + path.string());
}

namespace {

int read_ppm_token(std::istream& in) {
    // skips whitespace and '#' comments between header fields
    while (true) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = -1;
    in >> value;
    return value;
}

}  // namespace

ImageBuffer read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("read_ppm: cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P6") throw io_error("read_ppm: not a P6 file: " + path.string());
    const int w = read_ppm_token(in);
    const int h = read_ppm_token(in);
    const int maxval = read_ppm_token(in);
    if (w <= 0 || h <= 0 || maxval != 255)
        throw io_error("read_ppm: unsupported header in " + path.string());
    in.get();  // single whitespace after maxval
    ImageBuffer image(w, h);
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) throw io_error("read_ppm: truncated pixel data in " + path.string());
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) image.ch[c](y, x) = row[3 * x + c] / 255.0;
    }
    return image;
}

void write_map_ppm(const PixelMap& map, const std::filesystem::path& path) {
    ImageBuffer image(static_cast<int>(map.cols()), static_cast<int>(map.rows()));
    for (auto& plane : image.ch) plane = map;
    write_ppm(image, path);
}

ImageBuffer triptych(const ImageBuffer& target, const ImageBuffer& render) {
    if (!target.same_resolution(render)) throw contract_error("triptych: resolution mismatch");
    ImageBuffer out(target.width * 3, target.height);
    for (int c = 0; c < 3; ++c) {
        out.ch[c].block(0, 0, target.height, target.width) = target.ch[c];
        out.ch[c].block(0, target.width, target.height, target.width) = render.ch[c];
        out.ch[c].block(0, 2 * target.width, target.height, target.width) =
            (target.ch[c] - render.ch[c]).abs();
    }
    return out;
}

}  // namespace mhgs
