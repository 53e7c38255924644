#pragma once

#include "olu/stream.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace olu {

/// Record format: '#' header lines, then `time,op,index,payload` rows where
/// payload is base64 of [tag u8][d u32][doubles...] in host byte order.
/// Quadratic payloads carry minimizer then the row-major Hessian, logistic
/// payloads carry features then the label. Delete rows have an empty payload.
void write_stream(std::ostream& out, const EventStream& stream);
EventStream read_stream(std::istream& in);

std::string encode_payload(const SamplePayload& p);
/// `previous` lets consecutive identical Hessians share storage.
SamplePayload decode_payload(std::string_view blob,
                             const std::shared_ptr<const Matrix>& previous = nullptr);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace olu
