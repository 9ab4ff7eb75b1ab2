#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqrank {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed external input. `line()` is 1-based; 0 means "not line-addressable".
class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), m_line(line)
    {}

    std::size_t line() const noexcept { return m_line; }

  private:
    std::size_t m_line;
};

class DuplicateIdError : public Error {
  public:
    DuplicateIdError(std::string id, std::size_t line)
        : Error("line " + std::to_string(line) + ": duplicate id '" + id + "'"),
          m_id(std::move(id)),
          m_line(line)
    {}

    const std::string& id() const noexcept { return m_id; }
    std::size_t line() const noexcept { return m_line; }

  private:
    std::string m_id;
    std::size_t m_line;
};

/// Invalid user configuration, detected before any compute starts.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A pipeline stage failed; `stage()` names it ("load", "index", "retrieve", ...).
class StageError : public Error {
  public:
    StageError(std::string stage, const std::string& cause)
        : Error("stage '" + stage + "' failed: " + cause), m_stage(std::move(stage))
    {}

    const std::string& stage() const noexcept { return m_stage; }

  private:
    std::string m_stage;
};

/// Failure inside a Scorer or while talking to a remote one.
class ScorerError : public Error {
  public:
    using Error::Error;
};

/// Remote service replied with a protocol-level error object.
class RemoteError : public ScorerError {
  public:
    RemoteError(std::string code, const std::string& message)
        : ScorerError("remote error [" + code + "]: " + message), m_code(std::move(code))
    {}

    const std::string& code() const noexcept { return m_code; }

  private:
    std::string m_code;
};

} // namespace seqrank
