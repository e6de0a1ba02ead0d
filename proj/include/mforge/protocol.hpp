#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "mforge/json_io.hpp"
#include "mforge/score.hpp"
#include "mforge/sim.hpp"

namespace mforge {

/// Bidirectional line transport. Lines exclude the trailing newline.
class LineChannel {
public:
    virtual ~LineChannel() = default;
    /// Next complete line. With `block` false returns immediately when no
    /// line is buffered or readable. Returns nullopt on end of stream too;
    /// `closed()` distinguishes the two cases.
    virtual std::optional<std::string> read_line(bool block) = 0;
    virtual bool write_line(std::string_view line) = 0;
    virtual bool closed() const = 0;
};

/// Line channel over POSIX file descriptors (sockets, pipes or stdio).
class FdChannel : public LineChannel {
public:
    FdChannel(int in_fd, int out_fd, bool owns = false);
    ~FdChannel() override;
    FdChannel(const FdChannel&) = delete;
    FdChannel& operator=(const FdChannel&) = delete;

    std::optional<std::string> read_line(bool block) override;
    bool write_line(std::string_view line) override;
    bool closed() const override { return eof_; }

private:
    int in_fd_;
    int out_fd_;
    bool owns_;
    bool eof_ = false;
    std::string buffer_;
};

/// Connected pair of channels (socketpair) for in-process clients.
std::pair<std::unique_ptr<FdChannel>, std::unique_ptr<FdChannel>> channel_pair();

/// Serialized protocol message: `kind` first, remaining fields in sorted order.
std::string protocol_line(std::string_view kind, const Json& fields);

struct ServeOptions {
    RunOptions run;
    /// Wait for one `command` message per tick instead of polling.
    bool lockstep = false;
};

struct SessionResult {
    MissionLog log;
    MetricsReport report;
};

/// Runs one mission over the channel: `hello`, then per tick a `tick`
/// message and the thread's `detection` or `perfect_report` messages,
/// finally `end` with the report and log hash. Client `command` messages
/// (waypoints, velocity, hover, declare, stop) take effect at the next tick
/// and are acknowledged; malformed lines get an `error` with reason
/// BAD_MESSAGE. Connection loss ends the run with CLIENT_ERROR.
SessionResult serve_session(const MissionDescription& md, const SimulationConfig& cfg, LineChannel& channel,
                            const ServeOptions& options = {});

/// Parsed endpoint: "stdio", "tcp:HOST:PORT" or "unix:PATH".
struct Endpoint {
    enum class Kind { Stdio, Tcp, Unix };
    Kind kind = Kind::Stdio;
    std::string host;
    int port = 0;
    std::string path;

    static Endpoint parse(std::string_view text);
};

/// Listening socket for a TCP or Unix endpoint; returns the fd. Throws IO_ERROR.
int listen_on(const Endpoint& ep);
/// Connects to a TCP or Unix endpoint; returns the fd. Throws IO_ERROR.
int connect_to(const Endpoint& ep);

}  // namespace mforge
