#pragma once

#include <atomic>
#include <stdexcept>
#include <string>

namespace varseq {

// Base class for all engine errors.
struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A derivative would exceed the configured jet-order cap.
struct OrderOverflow : EngineError {
    explicit OrderOverflow(const std::string& what) : EngineError(what) {}
};

// Density handed to integrate_by_parts is not linear in the designated bank.
struct NotLinear : EngineError {
    explicit NotLinear(const std::string& what) : EngineError(what) {}
};

// A defined symbol has no derivative rule for the requested slot.
struct UnknownSymbol : EngineError {
    explicit UnknownSymbol(const std::string& what) : EngineError(what) {}
};

// noether_current requires a verified symmetry.
struct NotASymmetry : EngineError {
    explicit NotASymmetry(const std::string& what) : EngineError(what) {}
};

// hamiltonian_current requires all Bianchi expressions to vanish.
struct BianchiNonzero : EngineError {
    explicit BianchiNonzero(const std::string& what) : EngineError(what) {}
};

// kernel_test requires a critical background section.
struct BackgroundNotCritical : EngineError {
    explicit BackgroundNotCritical(const std::string& what) : EngineError(what) {}
};

struct EvalError : EngineError {
    explicit EvalError(const std::string& what) : EngineError(what) {}
};

struct IntegrationFailure : EngineError {
    explicit IntegrationFailure(const std::string& what) : EngineError(what) {}
};

struct StencilOutOfRange : EngineError {
    explicit StencilOutOfRange(const std::string& what) : EngineError(what) {}
};

struct NotSupported : EngineError {
    explicit NotSupported(const std::string& what) : EngineError(what) {}
};

struct Cancelled : EngineError {
    Cancelled() : EngineError("operation cancelled") {}
};

struct ParseError : EngineError {
    int line = 0;
    int col = 0;
    ParseError(const std::string& what, int line_, int col_)
        : EngineError(what), line(line_), col(col_) {}
};

// Cooperative cancellation.  Long-running expansions poll the installed token
// between term rewrites; install with ScopedCancelToken.
struct CancelToken {
    std::atomic<bool> cancelled{false};
    void cancel() { cancelled.store(true, std::memory_order_relaxed); }
};

namespace detail {
inline const CancelToken*& current_cancel_token() {
    thread_local const CancelToken* tok = nullptr;
    return tok;
}
}  // namespace detail

class ScopedCancelToken {
  public:
    explicit ScopedCancelToken(const CancelToken& tok) : prev_(detail::current_cancel_token()) {
        detail::current_cancel_token() = &tok;
    }
    ~ScopedCancelToken() { detail::current_cancel_token() = prev_; }
    ScopedCancelToken(const ScopedCancelToken&) = delete;
    ScopedCancelToken& operator=(const ScopedCancelToken&) = delete;

  private:
    const CancelToken* prev_;
};

inline void poll_cancellation() {
    const CancelToken* tok = detail::current_cancel_token();
    if (tok && tok->cancelled.load(std::memory_order_relaxed)) throw Cancelled{};
}

}  // namespace varseq
