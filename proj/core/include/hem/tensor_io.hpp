#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hem/matrix.hpp"
#include "hem/segmentation.hpp"

namespace hem {

/// Dense n-dimensional tensor exchanged through files. Values travel as
/// 32-bit floats on disk and widen to double in memory.
///
/// Binary layout ("HEMT"):
///   offset 0   magic bytes 'H' 'E' 'M' 'T'
///   offset 4   u8 version, currently 1
///   offset 5   u8 rank
///   offset 6   rank x u32 little-endian dims
///   then       row-major payload of 32-bit little-endian floats
///
/// The JSON form used by tests is {"dims":[...],"data":[...]}.
struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<double> data;  // row-major

    std::size_t element_count() const;
};

/// Serializes to the binary layout. Throws when the payload length does not
/// match the dims product or a value is not finite.
std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);

/// Inverse of encode_tensor; validates magic, version, dims, payload length,
/// and finiteness.
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

/// Parses the JSON form. Same validation as decode_tensor.
Tensor parse_json_tensor(const std::string& text);

/// Reads either format, sniffing the magic bytes.
Tensor read_tensor(const std::filesystem::path& path);

/// Writes the binary form.
void write_tensor(const std::filesystem::path& path, const Tensor& tensor);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

/// Hash of the tensor's binary encoding, as "fnv1a64:<16 hex digits>".
std::string tensor_checksum(const Tensor& tensor);

/// Interprets a rank-4 [3, T, H, W] tensor as T frames.
FrameSequence frames_from_tensor(const Tensor& tensor);

/// Interprets a rank-3 [T, d, p] tensor as T token matrices of d x p.
std::vector<Matrix> features_from_tensor(const Tensor& tensor);

/// Rank-2 [rows, cols] round trips with Matrix.
Tensor tensor_from_matrix(const Matrix& m);
Matrix matrix_from_tensor(const Tensor& tensor);

}  // namespace hem
