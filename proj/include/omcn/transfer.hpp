#pragma once

// Per-hop client/server file transfer. Each hop has a client that sends
// numbered packets and a server that periodically reports which packets it
// received; unacknowledged packets are retransmitted after a timeout. On the
// relayed path the cellular client can only send packets the relay's D2D
// server has already received.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "omcn/errors.hpp"

namespace omcn {

using Seq = std::int64_t;

struct TransferParams {
  std::int64_t file_bytes = 50'000'000;
  int packet_payload = 1470;  // bytes
  double report_period_s = 0.1;
  double retransmit_timeout_s = 0.2;

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (file_bytes <= 0) out.emplace_back("transfer.file_bytes must be > 0");
    if (packet_payload <= 0) out.emplace_back("transfer.packet_payload must be > 0");
    if (!(report_period_s > 0.0)) out.emplace_back("transfer.report_period must be > 0");
    if (!(retransmit_timeout_s > 0.0)) out.emplace_back("transfer.retransmit_timeout must be > 0");
    return out;
  }

  Seq packet_count() const { return (file_bytes + packet_payload - 1) / packet_payload; }

  // Payload of packet `seq` (1-based); the last one carries the remainder.
  std::int64_t payload_bytes(Seq seq) const {
    const Seq n = packet_count();
    if (seq < 1 || seq > n) throw RangeError("payload_bytes: sequence number out of range");
    return seq < n ? packet_payload : file_bytes - (n - 1) * packet_payload;
  }
};

enum class Hop { d2d = 0, cell = 1 };

inline const char* to_string(Hop h) { return h == Hop::d2d ? "d2d" : "cell"; }

struct Report {
  double t = 0.0;
  Hop hop = Hop::cell;
  std::vector<Seq> acked;
};

struct HopClient {
  Seq next_fresh = 1;                 // used when the hop is fed by the source file
  std::map<Seq, double> unacked;      // seq -> last send time
  std::deque<Seq> retransmit_queue;
  std::int64_t sends = 0;
  std::int64_t retransmissions = 0;
  std::int64_t distinct_sent_bytes = 0;
  std::vector<bool> ever_sent;
};

struct HopServer {
  std::vector<bool> received;
  std::int64_t received_count = 0;
  std::int64_t distinct_bytes = 0;
  std::int64_t delivered_bytes = 0;  // includes duplicates
  std::int64_t duplicates = 0;
  std::int64_t errored = 0;
  std::vector<Seq> pending_ack;
  double last_report_t = 0.0;
};

class TransferState {
 public:
  // `relayed` enables the D2D hop and couples the cellular client to the
  // relay buffer; otherwise the cellular hop reads the source file directly.
  TransferState(TransferParams params, bool relayed) : p_(params), relayed_(relayed) {
    if (auto pr = p_.problems(); !pr.empty()) throw ValidationError(pr);
    n_ = p_.packet_count();
    for (auto& c : clients_) c.ever_sent.assign(static_cast<std::size_t>(n_ + 1), false);
    for (auto& s : servers_) s.received.assign(static_cast<std::size_t>(n_ + 1), false);
  }

  const TransferParams& params() const { return p_; }
  bool relayed() const { return relayed_; }
  Seq packet_count() const { return n_; }

  // Picks and registers the next packet to send on `hop`: retransmissions
  // first, then fresh data (from the relay buffer on the relayed cellular hop).
  std::optional<Seq> next_payload(Hop hop, double now) {
    check_hop(hop);
    auto& c = client_mut(hop);
    Seq seq = 0;
    bool retx = false;
    if (!c.retransmit_queue.empty()) {
      seq = c.retransmit_queue.front();
      c.retransmit_queue.pop_front();
      retx = true;
    } else if (hop == Hop::cell && relayed_) {
      if (relay_buffer_.empty()) return std::nullopt;
      seq = relay_buffer_.front();
      relay_buffer_.pop_front();
    } else {
      if (c.next_fresh > n_) return std::nullopt;
      seq = c.next_fresh++;
    }
    c.unacked[seq] = now;
    ++c.sends;
    if (retx) ++c.retransmissions;
    if (!c.ever_sent[static_cast<std::size_t>(seq)]) {
      c.ever_sent[static_cast<std::size_t>(seq)] = true;
      c.distinct_sent_bytes += p_.payload_bytes(seq);
    }
    return seq;
  }

  // True when next_payload would return a packet.
  bool has_payload(Hop hop) const {
    check_hop(hop);
    const auto& c = client(hop);
    if (!c.retransmit_queue.empty()) return true;
    if (hop == Hop::cell && relayed_) return !relay_buffer_.empty();
    return c.next_fresh <= n_;
  }

  void on_receive(Hop hop, Seq seq, bool error_flag) {
    check_hop(hop);
    if (seq < 1 || seq > n_) throw RangeError("on_receive: sequence number out of range");
    auto& s = server_mut(hop);
    if (error_flag) {
      ++s.errored;
      return;
    }
    const auto bytes = p_.payload_bytes(seq);
    s.delivered_bytes += bytes;
    if (s.received[static_cast<std::size_t>(seq)]) {
      ++s.duplicates;
      return;
    }
    s.received[static_cast<std::size_t>(seq)] = true;
    ++s.received_count;
    s.distinct_bytes += bytes;
    s.pending_ack.push_back(seq);
    if (hop == Hop::d2d) relay_buffer_.push_back(seq);
  }

  bool report_due(Hop hop, double now) const {
    return now + 1e-9 >= server(hop).last_report_t + p_.report_period_s;
  }

  Report make_report(Hop hop, double now) {
    check_hop(hop);
    auto& s = server_mut(hop);
    Report r{now, hop, std::move(s.pending_ack)};
    s.pending_ack.clear();
    s.last_report_t = now;
    return r;
  }

  // Clears acknowledged packets, then moves packets unacknowledged for longer
  // than the retransmit timeout to the retransmit queue.
  void apply_report(const Report& report) {
    check_hop(report.hop);
    auto& c = client_mut(report.hop);
    for (Seq s : report.acked) c.unacked.erase(s);
    for (auto it = c.unacked.begin(); it != c.unacked.end();) {
      if (it->second <= report.t - p_.retransmit_timeout_s + 1e-9) {
        c.retransmit_queue.push_back(it->first);
        it = c.unacked.erase(it);
      } else {
        ++it;
      }
    }
  }

  bool complete() const { return server(Hop::cell).received_count == n_; }

  const HopClient& client(Hop h) const { return clients_[static_cast<int>(h)]; }
  const HopServer& server(Hop h) const { return servers_[static_cast<int>(h)]; }
  const std::deque<Seq>& relay_buffer() const { return relay_buffer_; }

 private:
  HopClient& client_mut(Hop h) { return clients_[static_cast<int>(h)]; }
  HopServer& server_mut(Hop h) { return servers_[static_cast<int>(h)]; }

  void check_hop(Hop h) const {
    if (h == Hop::d2d && !relayed_) throw ProtocolError("D2D hop used on a direct transfer");
  }

  TransferParams p_;
  bool relayed_;
  Seq n_ = 0;
  HopClient clients_[2];
  HopServer servers_[2];
  std::deque<Seq> relay_buffer_;
};

}  // namespace omcn
