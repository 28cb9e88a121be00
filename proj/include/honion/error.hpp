// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace honion {

enum class ErrorCode {
    InvalidArgument,
    Domain,
    ConsensusTooSmall,
    Config,
    OrphanVisit,
    UncoverableVertex,
    ComponentTooLarge,
    Parse,
    Io,
    Bind,
    LogWrite,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string msg)
        : std::runtime_error(std::move(msg)), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

} // namespace honion
