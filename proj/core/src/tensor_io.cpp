#include "hem/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hem {

namespace {

constexpr char MAGIC[4] = {'H', 'E', 'M', 'T'};
constexpr std::uint8_t VERSION = 1;
constexpr std::size_t HEADER_BASE = 6;  // magic + version + rank

void append_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t read_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string dims_to_string(const std::vector<std::uint32_t>& dims) {
    std::string out = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i > 0) {
            out += ",";
        }
        out += std::to_string(dims[i]);
    }
    return out + "]";
}

void check_payload_length(const std::vector<std::uint32_t>& dims, std::size_t expected,
                          std::size_t got) {
    if (expected != got) {
        throw std::invalid_argument("payload length mismatch: dims " + dims_to_string(dims) +
                                    " imply " + std::to_string(expected) + " values, got " +
                                    std::to_string(got));
    }
}

void check_finite(double v, std::size_t index) {
    if (!std::isfinite(v)) {
        throw std::invalid_argument("tensor payload has a non-finite value at index " +
                                    std::to_string(index));
    }
}

}  // namespace

std::size_t Tensor::element_count() const {
    std::size_t count = 1;
    for (std::uint32_t d : dims) {
        if (d != 0 && count > std::numeric_limits<std::size_t>::max() / d) {
            throw std::invalid_argument("tensor dims " + dims_to_string(dims) + " overflow");
        }
        count *= d;
    }
    return count;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
    if (tensor.dims.size() > 255) {
        throw std::invalid_argument("tensor rank " + std::to_string(tensor.dims.size()) +
                                    " exceeds 255");
    }
    check_payload_length(tensor.dims, tensor.element_count(), tensor.data.size());

    std::vector<std::uint8_t> out;
    out.reserve(HEADER_BASE + 4 * tensor.dims.size() + 4 * tensor.data.size());
    out.insert(out.end(), MAGIC, MAGIC + 4);
    out.push_back(VERSION);
    out.push_back(static_cast<std::uint8_t>(tensor.dims.size()));
    for (std::uint32_t d : tensor.dims) {
        append_u32le(out, d);
    }
    for (std::size_t i = 0; i < tensor.data.size(); ++i) {
        check_finite(tensor.data[i], i);
        const float f = static_cast<float>(tensor.data[i]);
        append_u32le(out, std::bit_cast<std::uint32_t>(f));
    }
    return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < HEADER_BASE) {
        throw std::invalid_argument("tensor file truncated: " + std::to_string(bytes.size()) +
                                    " bytes is shorter than the 6-byte header");
    }
    if (std::memcmp(bytes.data(), MAGIC, 4) != 0) {
        throw std::invalid_argument("bad magic bytes (expected \"HEMT\")");
    }
    if (bytes[4] != VERSION) {
        throw std::invalid_argument("unsupported tensor version " + std::to_string(bytes[4]) +
                                    " (expected 1)");
    }
    const std::size_t rank = bytes[5];
    if (bytes.size() < HEADER_BASE + 4 * rank) {
        throw std::invalid_argument("tensor file truncated inside the dims of a rank-" +
                                    std::to_string(rank) + " header");
    }

    Tensor tensor;
    tensor.dims.resize(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        tensor.dims[i] = read_u32le(bytes.data() + HEADER_BASE + 4 * i);
    }
    const std::size_t count = tensor.element_count();
    const std::size_t payload = bytes.size() - HEADER_BASE - 4 * rank;
    if (payload % 4 != 0) {
        throw std::invalid_argument("tensor payload of " + std::to_string(payload) +
                                    " bytes is not a whole number of 32-bit floats");
    }
    check_payload_length(tensor.dims, count, payload / 4);

    tensor.data.resize(count);
    const std::uint8_t* p = bytes.data() + HEADER_BASE + 4 * rank;
    for (std::size_t i = 0; i < count; ++i, p += 4) {
        tensor.data[i] = static_cast<double>(std::bit_cast<float>(read_u32le(p)));
        check_finite(tensor.data[i], i);
    }
    return tensor;
}

Tensor parse_json_tensor(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("invalid JSON tensor: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("dims") || !doc.contains("data") ||
        !doc["dims"].is_array() || !doc["data"].is_array()) {
        throw std::invalid_argument(
            "invalid JSON tensor: expected an object with \"dims\" and \"data\" arrays");
    }

    Tensor tensor;
    for (const auto& d : doc["dims"]) {
        if (!d.is_number_unsigned() ||
            d.get<std::uint64_t>() > std::numeric_limits<std::uint32_t>::max()) {
            throw std::invalid_argument("invalid JSON tensor: dims must be unsigned 32-bit");
        }
        tensor.dims.push_back(d.get<std::uint32_t>());
    }
    for (const auto& v : doc["data"]) {
        if (!v.is_number()) {
            throw std::invalid_argument("invalid JSON tensor: data must be numeric");
        }
        tensor.data.push_back(v.get<double>());
    }
    check_payload_length(tensor.dims, tensor.element_count(), tensor.data.size());
    for (std::size_t i = 0; i < tensor.data.size(); ++i) {
        check_finite(tensor.data[i], i);
    }
    return tensor;
}

Tensor read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open tensor file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (!in.good() && !in.eof()) {
        throw std::runtime_error("cannot read tensor file " + path.string());
    }
    const std::string content = std::move(buffer).str();

    if (content.size() >= 4 && std::memcmp(content.data(), MAGIC, 4) == 0) {
        return decode_tensor(std::span<const std::uint8_t>(
            reinterpret_cast<const std::uint8_t*>(content.data()), content.size()));
    }
    return parse_json_tensor(content);
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
    const std::vector<std::uint8_t> bytes = encode_tensor(tensor);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) {
        throw std::runtime_error("cannot write tensor file " + path.string());
    }
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (std::uint8_t b : bytes) {
        hash ^= b;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string tensor_checksum(const Tensor& tensor) {
    const std::uint64_t hash = fnv1a64(encode_tensor(tensor));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string("fnv1a64:") + buf;
}

FrameSequence frames_from_tensor(const Tensor& tensor) {
    if (tensor.dims.size() != 4 || tensor.dims[0] != 3) {
        throw std::invalid_argument("frames tensor must have dims [3,T,H,W], got " +
                                    dims_to_string(tensor.dims));
    }
    const std::size_t t_count = tensor.dims[1];
    const std::size_t height = tensor.dims[2];
    const std::size_t width = tensor.dims[3];
    if (t_count == 0 || height == 0 || width == 0) {
        throw std::invalid_argument("frames tensor has an empty axis: " +
                                    dims_to_string(tensor.dims));
    }

    FrameSequence video;
    video.frames.reserve(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        Frame frame(height, width);
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t y = 0; y < height; ++y) {
                for (std::size_t x = 0; x < width; ++x) {
                    frame.value(c, y, x) = tensor.data[((c * t_count + t) * height + y) * width + x];
                }
            }
        }
        video.frames.push_back(std::move(frame));
    }
    return video;
}

std::vector<Matrix> features_from_tensor(const Tensor& tensor) {
    if (tensor.dims.size() != 3) {
        throw std::invalid_argument("features tensor must have dims [T,d,p], got " +
                                    dims_to_string(tensor.dims));
    }
    const std::size_t t_count = tensor.dims[0];
    const std::size_t dim = tensor.dims[1];
    const std::size_t tokens = tensor.dims[2];
    if (t_count == 0 || dim == 0 || tokens == 0) {
        throw std::invalid_argument("features tensor has an empty axis: " +
                                    dims_to_string(tensor.dims));
    }

    std::vector<Matrix> features;
    features.reserve(t_count);
    const std::size_t stride = dim * tokens;
    for (std::size_t t = 0; t < t_count; ++t) {
        std::vector<double> slice(tensor.data.begin() + static_cast<std::ptrdiff_t>(t * stride),
                                  tensor.data.begin() +
                                      static_cast<std::ptrdiff_t>((t + 1) * stride));
        features.emplace_back(dim, tokens, std::move(slice));
    }
    return features;
}

Tensor tensor_from_matrix(const Matrix& m) {
    Tensor tensor;
    tensor.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
    tensor.data = m.data();
    return tensor;
}

Matrix matrix_from_tensor(const Tensor& tensor) {
    if (tensor.dims.size() != 2) {
        throw std::invalid_argument("matrix tensor must have dims [rows,cols], got " +
                                    dims_to_string(tensor.dims));
    }
    return Matrix(tensor.dims[0], tensor.dims[1], tensor.data);
}

}  // namespace hem
