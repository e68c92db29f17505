#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aa {

enum class ErrorCode {
    EmptyShout,
    TooLong,
    InvalidText,
    InvalidNick,
    InvalidConfig,
    MixedAuthors,
    DuplicateIdemKey,
    DuplicateAssignment,
    AlreadyDecided,
    UnknownDeveloper,
    UnknownSession,
    UnknownToken,
    InvalidRecord,
    StorageFailure,
    CorruptJournal,
    NoEligibleValidator,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised when the journal cannot be replayed past some point. `last_good_seq`
/// is the seq of the last complete record (0 if none).
class CorruptJournal : public Error {
public:
    CorruptJournal(std::uint64_t last_good_seq, const std::string& message, bool torn_tail)
        : Error(ErrorCode::CorruptJournal, message), last_good_seq_(last_good_seq), torn_tail_(torn_tail) {}
    std::uint64_t last_good_seq() const noexcept { return last_good_seq_; }
    /// True when only the final line is damaged, which recovery may drop.
    bool torn_tail() const noexcept { return torn_tail_; }

private:
    std::uint64_t last_good_seq_;
    bool torn_tail_;
};

}  // namespace aa
