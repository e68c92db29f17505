#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace aa {

std::string sha256_hex(std::string_view data);

/// 128 bits from the OS CSPRNG, base64url without padding (22 chars).
std::string random_token();

std::string base64url_encode(std::string_view bytes);
std::optional<std::string> base64url_decode(std::string_view text);

}  // namespace aa
