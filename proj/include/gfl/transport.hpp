#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include "gfl/accounting.hpp"
#include "gfl/error.hpp"
#include "gfl/random.hpp"
#include "gfl/wire.hpp"

namespace gfl {

inline constexpr double kForever = std::numeric_limits<double>::infinity();

struct RecordedMessage {
    NodeId from = 0, to = 0;
    MessageKind kind = MessageKind::kHello;
    std::uint32_t round = 0;
    std::uint64_t link_seq = 0;
    std::int64_t sent_ns = 0;
    std::int64_t delivered_ns = 0;  // simulated backend only
    std::uint64_t payload_hash = 0;
    std::size_t payload_size = 0;
    Bytes payload;  // kept when payload recording is on
};

class Endpoint {
public:
    Endpoint(const Endpoint&) = delete;
    Endpoint& operator=(const Endpoint&) = delete;
    virtual ~Endpoint() = default;

    NodeId id() const noexcept { return id_; }

    virtual void send(NodeId to, const WireMessage& msg) = 0;

    // Blocks until the next message on the link from `from` arrives, or the
    // timeout (seconds on this endpoint's clock) expires.
    WireMessage recv_from(NodeId from, double timeout_s = kForever) {
        const std::int64_t start = now_ns();
        try {
            Received r = do_recv(from, timeout_s);
            const std::int64_t end = now_ns();
            Segment seg{Phase::kExchange, round_, start, end, std::nullopt};
            if (end > start) seg.cause = SegmentCause{from, r.sent_ns};
            record(seg);
            return std::move(r.msg);
        } catch (const TimeoutError&) {
            record({Phase::kExchange, round_, start, now_ns(), std::nullopt});
            throw;
        }
    }

    virtual std::int64_t now_ns() const = 0;
    double now() const { return ns_to_s(now_ns()); }

    // Round tag attached to subsequently recorded segments.
    void set_round(std::uint32_t r) noexcept { round_ = r; }
    std::uint32_t round() const noexcept { return round_; }

    // Runs `work` as a compute phase. The simulated backend charges `cost_ns`
    // of virtual time; the TCP backend records the measured wall time.
    template <typename F>
    decltype(auto) compute(Phase phase, std::int64_t cost_ns, F&& work) {
        struct Finish {
            Endpoint* ep;
            Phase phase;
            std::int64_t start, cost;
            ~Finish() {
                ep->advance(cost);
                ep->record({phase, ep->round_, start, ep->now_ns(), std::nullopt});
            }
        } finish{this, phase, now_ns(), cost_ns};
        return std::forward<F>(work)();
    }

    const Timeline& timeline() const noexcept { return timeline_; }

    virtual void close() = 0;

protected:
    explicit Endpoint(NodeId id) : id_(id) { timeline_.node = id; }

    struct Received {
        WireMessage msg;
        std::int64_t sent_ns = 0;
    };

    virtual Received do_recv(NodeId from, double timeout_s) = 0;
    virtual void advance(std::int64_t cost_ns) = 0;

    void record(const Segment& s) {
        if (s.end_ns > s.start_ns) timeline_.segments.push_back(s);
    }

    Timeline take_timeline() { return std::move(timeline_); }

private:
    NodeId id_;
    std::uint32_t round_ = kSetupRound;
    Timeline timeline_;
};

class Network {
public:
    Network() = default;
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;
    virtual ~Network() = default;

    virtual std::unique_ptr<Endpoint> open(NodeId id) = 0;
    virtual bool simulated() const noexcept = 0;

    void set_record_payloads(bool on) {
        std::lock_guard lk(log_mutex_);
        record_payloads_ = on;
    }

    // Every message sent so far, ordered by (from, to, per-link sequence).
    std::vector<RecordedMessage> messages() const {
        std::lock_guard lk(log_mutex_);
        auto out = log_;
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            return std::tie(a.from, a.to, a.link_seq) < std::tie(b.from, b.to, b.link_seq);
        });
        return out;
    }

    // Timelines of endpoints that have been closed, ordered by node id.
    std::vector<Timeline> timelines() const {
        std::lock_guard lk(log_mutex_);
        std::vector<Timeline> out;
        for (const auto& [id, t] : timelines_) out.push_back(t);
        return out;
    }

    void clear_records() {
        std::lock_guard lk(log_mutex_);
        log_.clear();
        timelines_.clear();
    }

protected:
    void record_message(NodeId from, NodeId to, const WireMessage& m, std::uint64_t seq, std::int64_t sent,
                        std::int64_t delivered) {
        RecordedMessage r{from, to, m.kind, m.round, seq, sent, delivered, hash_bytes(m.payload), m.payload.size(), {}};
        std::lock_guard lk(log_mutex_);
        if (record_payloads_) r.payload = m.payload;
        log_.push_back(std::move(r));
    }

    void store_timeline(Timeline t) {
        std::lock_guard lk(log_mutex_);
        timelines_[t.node] = std::move(t);
    }

private:
    mutable std::mutex log_mutex_;
    bool record_payloads_ = false;
    std::vector<RecordedMessage> log_;
    std::map<NodeId, Timeline> timelines_;
};

// ---------------------------------------------------------------------------
// Simulated backend: per-node virtual clocks in integer nanoseconds. A message
// sent at the sender's time t is delivered at max(t + latency, previous
// delivery on the same link), so links stay FIFO. When every open endpoint is
// blocked and none can make progress, the waiter with the earliest deadline
// times out at exactly that deadline.

struct LatencySpec {
    double min_s = 0;
    double max_s = 0;

    static LatencySpec fixed(double s) { return {s, s}; }
};

struct SimNetConfig {
    LatencySpec latency;
    std::map<std::pair<NodeId, NodeId>, LatencySpec> links;  // directed overrides
    std::uint64_t seed = 0;

    void set_link(NodeId from, NodeId to, LatencySpec spec) { links[{from, to}] = spec; }

    void validate() const {
        auto check = [](const LatencySpec& l) {
            if (!(l.min_s >= 0) || !(l.max_s >= l.min_s)) throw UsageError("latency must be >= 0 with min <= max");
        };
        check(latency);
        for (const auto& [k, v] : links) check(v);
    }
};

class SimNetwork final : public Network {
public:
    explicit SimNetwork(SimNetConfig cfg = {}) : cfg_(std::move(cfg)) { cfg_.validate(); }

    bool simulated() const noexcept override { return true; }

    std::unique_ptr<Endpoint> open(NodeId id) override;

    // Deliveries ordered by (delivery time, from, to, link sequence).
    std::vector<RecordedMessage> delivery_schedule() const {
        auto out = messages();
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            return std::tie(a.delivered_ns, a.from, a.to, a.link_seq) <
                   std::tie(b.delivered_ns, b.from, b.to, b.link_seq);
        });
        return out;
    }

    std::int64_t latency_ns(NodeId from, NodeId to, std::uint64_t seq) const {
        auto it = cfg_.links.find({from, to});
        const LatencySpec& spec = it == cfg_.links.end() ? cfg_.latency : it->second;
        if (spec.max_s == spec.min_s) return s_to_ns(spec.min_s);
        const std::uint64_t link = (static_cast<std::uint64_t>(from) << 32) | to;
        Rng rng(splitmix64(cfg_.seed ^ splitmix64(link)) ^ splitmix64(seq + 1));
        return s_to_ns(std::uniform_real_distribution<double>(spec.min_s, spec.max_s)(rng));
    }

private:
    friend class SimEndpoint;

    struct Pending {
        WireMessage msg;
        std::int64_t sent_ns, deliver_ns;
    };

    struct Waiter {
        NodeId from;
        std::int64_t deadline;
        bool fired = false;
    };

    using Link = std::pair<NodeId, NodeId>;

    void check_stall_locked() {
        if (waiters_.empty() || waiters_.size() < active_.size()) return;
        for (const auto& [id, w] : waiters_) {
            if (w.fired) return;
            auto q = queues_.find({w.from, id});
            if (q != queues_.end() && !q->second.empty()) return;
        }
        auto first = std::min_element(waiters_.begin(), waiters_.end(), [](const auto& a, const auto& b) {
            return std::tie(a.second.deadline, a.first) < std::tie(b.second.deadline, b.first);
        });
        if (first->second.deadline == kNever) {
            for (auto& [id, w] : waiters_) w.fired = true;
        } else {
            first->second.fired = true;
        }
        cv_.notify_all();
    }

    static constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();

    SimNetConfig cfg_;
    std::mutex m_;
    std::condition_variable cv_;
    std::set<NodeId> registered_, active_;
    std::map<Link, std::deque<Pending>> queues_;
    std::map<Link, std::uint64_t> link_seq_;
    std::map<Link, std::int64_t> last_delivery_;
    std::map<NodeId, Waiter> waiters_;
};

class SimEndpoint final : public Endpoint {
public:
    SimEndpoint(SimNetwork& net, NodeId id) : Endpoint(id), net_(net) {}
    ~SimEndpoint() override { close(); }

    std::int64_t now_ns() const override { return clock_; }

    void send(NodeId to, const WireMessage& msg) override {
        msg.validate();
        std::lock_guard lk(net_.m_);
        if (closed_) throw TransportError("send on a closed endpoint");
        if (!net_.registered_.count(to)) throw RoutingError("unknown destination node " + std::to_string(to));
        const SimNetwork::Link link{id(), to};
        const std::uint64_t seq = net_.link_seq_[link]++;
        std::int64_t deliver = clock_ + net_.latency_ns(id(), to, seq);
        auto& last = net_.last_delivery_[link];
        deliver = std::max(deliver, last);
        last = deliver;
        net_.queues_[link].push_back({msg, clock_, deliver});
        net_.record_message(id(), to, msg, seq, clock_, deliver);
        net_.cv_.notify_all();
    }

    void close() override {
        std::unique_lock lk(net_.m_);
        if (closed_) return;
        closed_ = true;
        net_.active_.erase(id());
        net_.waiters_.erase(id());
        net_.check_stall_locked();
        net_.cv_.notify_all();
        lk.unlock();
        net_.store_timeline(take_timeline());
    }

protected:
    Received do_recv(NodeId from, double timeout_s) override {
        std::unique_lock lk(net_.m_);
        if (!net_.registered_.count(from)) throw RoutingError("unknown source node " + std::to_string(from));
        const std::int64_t deadline =
            std::isinf(timeout_s) ? SimNetwork::kNever : clock_ + s_to_ns(std::max(0.0, timeout_s));
        auto& q = net_.queues_[{from, id()}];
        while (true) {
            if (!q.empty()) {
                net_.waiters_.erase(id());
                if (q.front().deliver_ns <= deadline) {
                    SimNetwork::Pending p = std::move(q.front());
                    q.pop_front();
                    clock_ = std::max(clock_, p.deliver_ns);
                    return {std::move(p.msg), p.sent_ns};
                }
                // Later messages on a FIFO link cannot arrive earlier.
                clock_ = deadline;
                throw TimeoutError("receive from node " + std::to_string(from) + " timed out");
            }
            auto w = net_.waiters_.find(id());
            if (w != net_.waiters_.end() && w->second.fired) {
                net_.waiters_.erase(w);
                if (deadline == SimNetwork::kNever)
                    throw TimeoutError("deadlock: node " + std::to_string(id()) + " waits on node " +
                                       std::to_string(from) + " which can never send");
                clock_ = deadline;
                throw TimeoutError("receive from node " + std::to_string(from) + " timed out");
            }
            net_.waiters_.try_emplace(id(), SimNetwork::Waiter{from, deadline, false});
            net_.check_stall_locked();
            net_.cv_.wait(lk, [&] {
                auto it = net_.waiters_.find(id());
                return !q.empty() || it == net_.waiters_.end() || it->second.fired;
            });
        }
    }

    void advance(std::int64_t cost_ns) override { clock_ += std::max<std::int64_t>(0, cost_ns); }

private:
    SimNetwork& net_;
    std::int64_t clock_ = 0;
    bool closed_ = false;
};

inline std::unique_ptr<Endpoint> SimNetwork::open(NodeId id) {
    std::lock_guard lk(m_);
    if (!registered_.insert(id).second) throw UsageError("node id " + std::to_string(id) + " already registered");
    active_.insert(id);
    return std::make_unique<SimEndpoint>(*this, id);
}

// ---------------------------------------------------------------------------
// TCP backend. Each endpoint listens on its own loopback port; frames are
// u32 LE length | i64 LE send timestamp | encoded message.

struct TcpConfig {
    std::string host = "127.0.0.1";
    std::uint16_t base_port = 0;  // 0: ephemeral ports; otherwise node i uses base_port + i
    std::size_t max_frame = std::size_t{64} << 20;
    double connect_timeout_s = 10.0;
};

namespace detail {

inline void write_all(int fd, const std::uint8_t* data, std::size_t n) {
    while (n > 0) {
        const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
        if (w <= 0) {
            if (w < 0 && errno == EINTR) continue;
            throw TransportError("socket write failed");
        }
        data += w;
        n -= static_cast<std::size_t>(w);
    }
}

// False on clean EOF before any byte.
inline bool read_all(int fd, std::uint8_t* data, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
        const ssize_t r = ::recv(fd, data + got, n - got, 0);
        if (r == 0) {
            if (got == 0) return false;
            throw TransportError("connection closed mid-frame");
        }
        if (r < 0) {
            if (errno == EINTR) continue;
            throw TransportError("socket read failed");
        }
        got += static_cast<std::size_t>(r);
    }
    return true;
}

}  // namespace detail

class TcpNetwork final : public Network {
public:
    explicit TcpNetwork(TcpConfig cfg = {}) : cfg_(std::move(cfg)), epoch_(std::chrono::steady_clock::now()) {}

    bool simulated() const noexcept override { return false; }
    std::unique_ptr<Endpoint> open(NodeId id) override;

    const TcpConfig& config() const noexcept { return cfg_; }

    std::int64_t now_ns() const {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - epoch_).count();
    }

    std::uint16_t port_of(NodeId id) const {
        std::lock_guard lk(m_);
        auto it = ports_.find(id);
        if (it != ports_.end()) return it->second;
        if (cfg_.base_port != 0) return static_cast<std::uint16_t>(cfg_.base_port + id);
        throw RoutingError("unknown destination node " + std::to_string(id));
    }

private:
    friend class TcpEndpoint;

    void register_port(NodeId id, std::uint16_t port) {
        std::lock_guard lk(m_);
        if (!ports_.emplace(id, port).second) throw UsageError("node id " + std::to_string(id) + " already registered");
    }

    std::uint64_t next_seq(NodeId from, NodeId to) {
        std::lock_guard lk(m_);
        return seq_[{from, to}]++;
    }

    TcpConfig cfg_;
    std::chrono::steady_clock::time_point epoch_;
    mutable std::mutex m_;
    std::map<NodeId, std::uint16_t> ports_;
    std::map<std::pair<NodeId, NodeId>, std::uint64_t> seq_;
};

class TcpEndpoint final : public Endpoint {
public:
    TcpEndpoint(TcpNetwork& net, NodeId id) : Endpoint(id), net_(net) {
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0) throw TransportError("cannot create socket");
        int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(net.cfg_.base_port ? static_cast<std::uint16_t>(net.cfg_.base_port + id) : 0);
        if (::inet_pton(AF_INET, net.cfg_.host.c_str(), &addr.sin_addr) != 1) {
            ::close(listen_fd_);
            throw TransportError("bad host address " + net.cfg_.host);
        }
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 64) < 0) {
            ::close(listen_fd_);
            throw TransportError("cannot listen for node " + std::to_string(id));
        }
        socklen_t len = sizeof addr;
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
        net.register_port(id, port_);
        acceptor_ = std::thread([this] { accept_loop(); });
    }

    ~TcpEndpoint() override { close(); }

    std::uint16_t port() const noexcept { return port_; }

    std::int64_t now_ns() const override { return net_.now_ns(); }

    void send(NodeId to, const WireMessage& msg) override {
        if (closed_) throw TransportError("send on a closed endpoint");
        const Bytes body = encode_message(msg);
        if (body.size() > net_.cfg_.max_frame) throw EncodeError("message exceeds the maximum frame size");
        const std::int64_t sent = now_ns();
        Bytes frame(12);
        wire::store_u32(frame.data(), static_cast<std::uint32_t>(body.size()));
        for (int i = 0; i < 8; ++i) frame[4 + i] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(sent) >> (8 * i));
        frame.insert(frame.end(), body.begin(), body.end());
        const int fd = connection(to);
        detail::write_all(fd, frame.data(), frame.size());
        net_.record_message(id(), to, msg, net_.next_seq(id(), to), sent, 0);
    }

    void close() override {
        {
            std::lock_guard lk(m_);
            if (closed_) return;
            closed_ = true;
        }
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        if (acceptor_.joinable()) acceptor_.join();
        for (auto& [to, fd] : out_fds_) {
            ::shutdown(fd, SHUT_RDWR);
            ::close(fd);
        }
        {
            std::lock_guard lk(m_);
            for (int fd : in_fds_) ::shutdown(fd, SHUT_RDWR);
        }
        for (auto& t : readers_) t.join();
        for (int fd : in_fds_) ::close(fd);
        cv_.notify_all();
        net_.store_timeline(take_timeline());
    }

protected:
    Received do_recv(NodeId from, double timeout_s) override {
        std::unique_lock lk(m_);
        auto ready = [&] { return !inbox_[from].empty() || !error_.empty(); };
        if (std::isinf(timeout_s)) {
            cv_.wait(lk, ready);
        } else if (!cv_.wait_for(lk, std::chrono::duration<double>(std::max(0.0, timeout_s)), ready)) {
            throw TimeoutError("receive from node " + std::to_string(from) + " timed out");
        }
        if (inbox_[from].empty()) throw TransportError(error_);
        Received r = std::move(inbox_[from].front());
        inbox_[from].pop_front();
        return r;
    }

    void advance(std::int64_t) override {}

private:
    int connection(NodeId to) {
        if (auto it = out_fds_.find(to); it != out_fds_.end()) return it->second;
        const std::uint16_t port = net_.port_of(to);
        const auto give_up = std::chrono::steady_clock::now() + std::chrono::duration<double>(net_.cfg_.connect_timeout_s);
        while (true) {
            const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
            if (fd < 0) throw TransportError("cannot create socket");
            sockaddr_in addr{};
            addr.sin_family = AF_INET;
            addr.sin_port = htons(port);
            ::inet_pton(AF_INET, net_.cfg_.host.c_str(), &addr.sin_addr);
            if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
                int one = 1;
                ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
                out_fds_[to] = fd;
                return fd;
            }
            ::close(fd);
            if (std::chrono::steady_clock::now() > give_up)
                throw TransportError("cannot connect to node " + std::to_string(to));
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
    }

    void accept_loop() {
        while (true) {
            const int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) {
                if (errno == EINTR) continue;
                return;
            }
            std::lock_guard lk(m_);
            if (closed_) {
                ::close(fd);
                return;
            }
            in_fds_.push_back(fd);
            readers_.emplace_back([this, fd] { read_loop(fd); });
        }
    }

    void read_loop(int fd) {
        try {
            while (true) {
                std::uint8_t head[12];
                if (!detail::read_all(fd, head, sizeof head)) return;
                const std::uint32_t len = wire::load_u32(head);
                if (len > net_.cfg_.max_frame) throw TransportError("incoming frame exceeds the maximum frame size");
                std::uint64_t sent = 0;
                for (int i = 0; i < 8; ++i) sent |= static_cast<std::uint64_t>(head[4 + i]) << (8 * i);
                Bytes body(len);
                if (len && !detail::read_all(fd, body.data(), len)) throw TransportError("connection closed mid-frame");
                WireMessage msg = decode_message(body);
                std::lock_guard lk(m_);
                inbox_[msg.sender].push_back({std::move(msg), static_cast<std::int64_t>(sent)});
                cv_.notify_all();
            }
        } catch (const std::exception& e) {
            std::lock_guard lk(m_);
            if (!closed_) error_ = e.what();
            cv_.notify_all();
        }
    }

    TcpNetwork& net_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::thread acceptor_;
    std::vector<std::thread> readers_;
    std::vector<int> in_fds_;
    std::map<NodeId, int> out_fds_;
    std::mutex m_;
    std::condition_variable cv_;
    std::map<NodeId, std::deque<Received>> inbox_;
    std::string error_;
    bool closed_ = false;
};

inline std::unique_ptr<Endpoint> TcpNetwork::open(NodeId id) { return std::make_unique<TcpEndpoint>(*this, id); }

}  // namespace gfl
