#include "mforge/protocol.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include "mforge/codec.hpp"
#include "mforge/error.hpp"
#include "mforge/hashing.hpp"

namespace mforge {

FdChannel::FdChannel(int in_fd, int out_fd, bool owns) : in_fd_(in_fd), out_fd_(out_fd), owns_(owns) {
    std::signal(SIGPIPE, SIG_IGN);
}

FdChannel::~FdChannel() {
    if (!owns_) return;
    ::close(in_fd_);
    if (out_fd_ != in_fd_) ::close(out_fd_);
}

std::optional<std::string> FdChannel::read_line(bool block) {
    while (true) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        if (eof_) return std::nullopt;
        pollfd p{in_fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, block ? -1 : 0);
        if (rc < 0) {
            if (errno == EINTR) continue;
            eof_ = true;
            return std::nullopt;
        }
        if (rc == 0) return std::nullopt;
        char chunk[4096];
        const ssize_t n = ::read(in_fd_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            eof_ = true;
            return std::nullopt;
        }
        if (n == 0) {
            eof_ = true;
            if (!buffer_.empty()) {
                std::string rest = std::move(buffer_);
                buffer_.clear();
                return rest;
            }
            return std::nullopt;
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

bool FdChannel::write_line(std::string_view line) {
    std::string data(line);
    data.push_back('\n');
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::write(out_fd_, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        off += static_cast<std::size_t>(n);
    }
    return true;
}

std::pair<std::unique_ptr<FdChannel>, std::unique_ptr<FdChannel>> channel_pair() {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) throw Error("IO_ERROR", std::strerror(errno));
    return {std::make_unique<FdChannel>(fds[0], fds[0], true), std::make_unique<FdChannel>(fds[1], fds[1], true)};
}

std::string protocol_line(std::string_view kind, const Json& fields) {
    std::string body = fields.is_object() && !fields.empty() ? canonical_line(fields) : std::string("{}");
    std::string out = "{\"kind\":" + Json(std::string(kind)).dump();
    if (body.size() > 2) out += "," + body.substr(1);
    else out += "}";
    return out;
}

namespace {

struct ClientMessage {
    std::optional<UavCommand> command;
    std::optional<std::string> declare;
    bool stop = false;
};

ClientMessage parse_client_message(const std::string& line) {
    const Json j = parse_json(line);
    ObjectReader r(j, "");
    const std::string kind = as_string(r.required("kind"), "kind");
    if (kind != "command") throw Error("BAD_MESSAGE", "unexpected message kind '" + kind + "'");
    ClientMessage m;
    if (const Json* t = r.optional("tick")) as_u64(*t, "tick");
    if (const Json* c = r.optional("command")) m.command = command_from_json(*c, "command");
    if (const Json* w = r.optional("waypoints")) {
        const Json& arr = as_array(*w, "waypoints");
        std::vector<Point3> wps;
        for (std::size_t i = 0; i < arr.size(); ++i) wps.push_back(point3_from_json(arr[i], index_path("waypoints", i)));
        m.command = UavCommand::goto_waypoints(std::move(wps));
    }
    if (const Json* v = r.optional("velocity")) m.command = UavCommand::fly_velocity(point3_from_json(*v, "velocity"));
    if (const Json* h = r.optional("hover")) {
        if (as_bool(*h, "hover")) m.command = UavCommand::hover();
    }
    if (const Json* d = r.optional("declare")) m.declare = as_string(*d, "declare");
    if (const Json* s = r.optional("stop")) m.stop = as_bool(*s, "stop");
    r.finish();
    return m;
}

Json client_detection(const Detection& d) {
    Json j = to_json(d);
    j.erase("true_entity_id");
    return j;
}

class ChannelPolicy : public Policy {
public:
    ChannelPolicy(LineChannel& ch, bool lockstep) : ch_(ch), lockstep_(lockstep) {}

    void begin(const MissionDescription& md, const SimulationConfig& cfg, MissionThread thread) override {
        const auto last = static_cast<std::uint64_t>(std::llround(md.mission_duration / cfg.tick_dt));
        send("hello", Json{{"schema_version", kSchemaVersion},
                           {"mission", mission_to_json(md)},
                           {"thread", std::string(to_string(thread))},
                           {"tick_dt", cfg.tick_dt},
                           {"last_tick", last},
                           {"lockstep", lockstep_}});
    }

    void observe(const TickObservation& obs) override {
        send("tick", Json{{"tick", obs.tick}, {"time", obs.time}, {"uav", to_json(obs.uav)}});
        for (const auto& d : obs.detections) {
            send("detection", Json{{"tick", obs.tick}, {"time", obs.time}, {"detection", client_detection(d)}});
        }
        if (obs.report) {
            send("perfect_report", Json{{"tick", obs.tick}, {"time", obs.time}, {"report", to_json(*obs.report)}});
        }
    }

    PolicyAction on_tick(const TickObservation& obs) override {
        PolicyAction action;
        bool got = false;
        while (true) {
            auto line = ch_.read_line(lockstep_ && !got);
            if (!line) {
                if (ch_.closed()) throw Error("CLIENT_ERROR", "connection lost");
                break;
            }
            if (line->empty()) continue;
            try {
                ClientMessage m = parse_client_message(*line);
                if (m.command) action.command = std::move(m.command);
                if (m.declare) action.declare_detection_id = std::move(m.declare);
                action.stop = action.stop || m.stop;
                send("ack", Json{{"tick", obs.tick}, {"applies_at", obs.tick + 1}});
                got = true;
            } catch (const Error& e) {
                send("error", Json{{"tick", obs.tick}, {"reason", "BAD_MESSAGE"}, {"detail", e.what()}});
            }
            if (lockstep_ && got) break;
        }
        return action;
    }

    void send(std::string_view kind, const Json& fields) {
        if (!ch_.write_line(protocol_line(kind, fields))) throw Error("CLIENT_ERROR", "write failed");
    }

private:
    LineChannel& ch_;
    bool lockstep_;
};

}  // namespace

SessionResult serve_session(const MissionDescription& md, const SimulationConfig& cfg, LineChannel& channel,
                            const ServeOptions& options) {
    ChannelPolicy policy(channel, options.lockstep);
    SessionResult res;
    res.log = run_mission(md, cfg, policy, options.run);
    res.report = score_mission(res.log, md);
    if (res.log.status != RunStatus::ClientError) {
        channel.write_line(protocol_line(
            "end", Json{{"status", std::string(to_string(res.log.status))}, {"report", to_json(res.report)},
                        {"log_hash", res.log.hash()}}));
    }
    return res;
}

Endpoint Endpoint::parse(std::string_view text) {
    Endpoint ep;
    if (text == "stdio" || text == "-") return ep;
    if (text.rfind("tcp:", 0) == 0) {
        const std::string rest(text.substr(4));
        const auto colon = rest.rfind(':');
        if (colon == std::string::npos) throw Error("INVALID_ENDPOINT", "expected tcp:HOST:PORT");
        ep.kind = Kind::Tcp;
        ep.host = rest.substr(0, colon);
        try {
            ep.port = std::stoi(rest.substr(colon + 1));
        } catch (const std::exception&) {
            throw Error("INVALID_ENDPOINT", "bad port in '" + std::string(text) + "'");
        }
        if (ep.port < 0 || ep.port > 65535) throw Error("INVALID_ENDPOINT", "port out of range");
        if (ep.host.empty()) ep.host = "127.0.0.1";
        return ep;
    }
    if (text.rfind("unix:", 0) == 0) {
        ep.kind = Kind::Unix;
        ep.path = std::string(text.substr(5));
        if (ep.path.empty()) throw Error("INVALID_ENDPOINT", "empty unix socket path");
        return ep;
    }
    throw Error("INVALID_ENDPOINT", "unrecognized endpoint '" + std::string(text) + "'");
}

namespace {

[[noreturn]] void io_fail(const std::string& what) { throw Error("IO_ERROR", what + ": " + std::strerror(errno)); }

int tcp_socket(const Endpoint& ep, bool listen_mode) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (listen_mode) hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(ep.port);
    if (::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res) != 0 || !res) {
        throw Error("IO_ERROR", "cannot resolve " + ep.host);
    }
    int fd = -1;
    for (addrinfo* a = res; a; a = a->ai_next) {
        fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0) continue;
        if (listen_mode) {
            int one = 1;
            ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
            if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 16) == 0) break;
        } else if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
            break;
        }
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) io_fail(std::string(listen_mode ? "listen " : "connect ") + ep.host + ":" + port);
    return fd;
}

int unix_socket(const Endpoint& ep, bool listen_mode) {
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (ep.path.size() >= sizeof addr.sun_path) throw Error("INVALID_ENDPOINT", "unix socket path too long");
    std::memcpy(addr.sun_path, ep.path.c_str(), ep.path.size() + 1);
    const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0) io_fail("socket");
    const auto* sa = reinterpret_cast<const sockaddr*>(&addr);
    if (listen_mode) {
        ::unlink(ep.path.c_str());
        if (::bind(fd, sa, sizeof addr) != 0 || ::listen(fd, 16) != 0) {
            ::close(fd);
            io_fail("listen " + ep.path);
        }
    } else if (::connect(fd, sa, sizeof addr) != 0) {
        ::close(fd);
        io_fail("connect " + ep.path);
    }
    return fd;
}

}  // namespace

int listen_on(const Endpoint& ep) {
    std::signal(SIGPIPE, SIG_IGN);
    switch (ep.kind) {
        case Endpoint::Kind::Tcp: return tcp_socket(ep, true);
        case Endpoint::Kind::Unix: return unix_socket(ep, true);
        case Endpoint::Kind::Stdio: break;
    }
    throw Error("INVALID_ENDPOINT", "stdio cannot listen");
}

int connect_to(const Endpoint& ep) {
    std::signal(SIGPIPE, SIG_IGN);
    switch (ep.kind) {
        case Endpoint::Kind::Tcp: return tcp_socket(ep, false);
        case Endpoint::Kind::Unix: return unix_socket(ep, false);
        case Endpoint::Kind::Stdio: break;
    }
    throw Error("INVALID_ENDPOINT", "stdio cannot connect");
}

}  // namespace mforge
