#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chainlens {

enum class Errc {
    truncated_data,
    bad_magic,
    malformed_block,
    invalid_address,
    corrupt_file,
    duplicate_block,
    fork_detected,
    orphan_block,
    bad_height,
    insufficient_data,
    infeasible_scenario,
};

const char* errc_name(Errc c);

// Thrown by parsers, graph construction and the scenario generator.
// `offset` carries the byte position for file-level errors (last good
// offset for corrupt_file) and is 0 when it has no meaning.
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string what, std::size_t offset = 0)
        : std::runtime_error(std::move(what)), code_(code), offset_(offset) {}

    Errc code() const noexcept { return code_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    Errc code_;
    std::size_t offset_;
};

} // namespace chainlens
