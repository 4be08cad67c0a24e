#pragma once

#include <map>
#include <memory>
#include <queue>
#include <set>
#include <variant>

#include "beran/bemutual.hpp"
#include "beran/beswitch.hpp"

namespace beran {

enum class NodeRole { UE, RU, DU, BcNode, BeSwitch, Bridge, CU, CN };

const char* to_string(NodeRole r);
std::optional<NodeRole> node_role_from_name(std::string_view name);

struct NodeDecl {
    std::string node_id;
    NodeRole role = NodeRole::UE;
};

struct LinkDecl {
    std::string link_id;
    std::string a, b;
    uint64_t latency_ticks = 1;
    bool tamper_once = false;  // adversarial: flip one payload bit once
};

struct IdentityDecl {
    std::string node_id;
    SuiteKind suite = SuiteKind::EllipticCurve;
    std::optional<uint64_t> seed;
};

struct FailureDecl {
    std::string link_id;
    uint64_t at_tick = 0;
};

struct ScenarioDecl {
    std::string kind;  // "emergency" | "d2d"
    std::string caller, callee;
};

/// Parsed topology/scenario description. The text format is line-oriented:
///   seed N
///   node <id> <UE|RU|DU|Bridge|CU|CN|BcNode|BeSwitch>
///   link <id> <a> <b> [latency=N] [tamper]
///   identity <node> [suite=ec|ff] [seed=N]
///   contact <node> <peer-node>
///   grant <node> <tokens>
///   fail <link> at=N
///   access_policy min_balance=N
///   scenario emergency caller=<ue> callee=<ue>
///   scenario d2d a=<ue> b=<ue>
struct SimConfig {
    uint64_t seed = 1;
    std::vector<NodeDecl> nodes;
    std::vector<LinkDecl> links;
    std::vector<IdentityDecl> identities;
    std::vector<std::pair<std::string, std::string>> contacts;
    std::vector<std::pair<std::string, int64_t>> grants;
    std::vector<FailureDecl> failures;
    std::optional<int64_t> access_min_balance;
    std::optional<ScenarioDecl> scenario;

    static std::variant<SimConfig, std::string> parse(const std::string& text);
};

struct TraceEvent {
    uint64_t tick = 0;
    std::string label;  // msg1..msg10, hs1..hs3, bridge, drop, timeout, outcome
    std::string source;
    std::string destination;
    std::string outcome;  // ok, hit, miss, bridge, dropped, established, failed:<reason>

    std::string to_line() const;
};

struct Trace {
    std::vector<TraceEvent> events;
    bool established = false;
    std::string failure;  // set when not established

    std::string to_text() const;
};

/// Deterministic single-threaded event simulation of UEs, RUs, DUs (each
/// hosting a BC node and a BE-switch), bridges and inert CU/CN nodes.
/// Identical (config, seed) pairs produce byte-identical traces.
class Simulation {
public:
    static std::variant<Simulation, std::string> build(const SimConfig& config);

    /// Link is Down from at_tick onward; in-flight frames on it are dropped.
    /// Throws std::invalid_argument for an unknown link. Idempotent.
    void inject_link_failure(const std::string& link_id, uint64_t at_tick);

    /// Full registry + connect + handshake flow of the emergency case.
    Trace run_emergency_scenario(const std::string& caller, const std::string& callee);

    /// Direct-link mutual authentication; no switch involvement.
    Trace run_d2d_handshake(const std::string& a, const std::string& b);

    /// Dispatch on the config's scenario line.
    Trace run_configured_scenario();

    const Identity* identity_of(const std::string& node_id) const;
    const Ledger* ledger_of(const std::string& node_id) const;
    std::optional<SessionKey> session_key_of(const std::string& node_id) const;
    bool link_up(const std::string& link_id) const;

private:
    Simulation() = default;

    struct Node {
        NodeDecl decl;
        std::vector<std::string> attachments;  // link ids, sorted
        std::optional<Identity> identity;
        std::array<uint8_t, 6> mac{};
        std::unique_ptr<Ledger> ledger;      // UE and DU
        std::unique_ptr<BeSwitch> beswitch;  // DU
        std::map<std::string, BcAddress> contacts;
        uint64_t reg_sequence = 0;
        // per-run handshake state
        std::optional<HandshakeState> hs;
        NonceCache nonces;
        bool registered = false;
    };

    struct LinkState {
        LinkDecl decl;
        bool up = true;
        bool tamper_pending = false;
    };

    struct Hop {
        uint64_t tick = 0;
        uint64_t seq = 0;
        std::string link_id;
        std::string from, to;
        std::shared_ptr<BeMacFrame> frame;
        std::string hs_label;  // set for handshake frames
        std::string logical_src;
    };
    struct HopAfter {
        bool operator()(const Hop& a, const Hop& b) const {
            return a.tick != b.tick ? a.tick > b.tick : a.seq > b.seq;
        }
    };

    enum class Stage {
        Idle,
        CalleeRegistering,
        CallerRegistering,
        Connecting,
        Handshaking,
        Done,
    };

    // engine
    void apply_due_failures();
    void send_hop(const std::string& from, const std::string& link_id,
                  std::shared_ptr<BeMacFrame> frame, const std::string& hs_label,
                  const std::string& logical_src);
    bool send_toward_ru(const std::string& ue, std::shared_ptr<BeMacFrame> frame,
                        const std::string& hs_label);
    void run_loop();
    void deliver(const Hop& hop);
    void handle_ue(Node& ue, const Hop& hop);
    void handle_du(Node& du, const Hop& hop);
    void handle_relay(Node& relay, const Hop& hop);

    // scenario steps
    void start_registration(const std::string& ue_id);
    void on_registered(const std::string& ue_id);
    void send_connect_request();
    void start_handshake();
    void process_handshake_frame(Node& ue, const BeMacFrame& frame, const std::string& hs_label,
                                 const std::string& logical_src);
    void finish(bool established, const std::string& failure);

    void trace(uint64_t tick, const std::string& label, const std::string& src,
               const std::string& dst, const std::string& outcome);

    Node* find_node(const std::string& id);
    LinkState* find_link(const std::string& id);
    std::string other_end(const LinkState& l, const std::string& from) const;
    std::string du_of_switch_label(const std::string& node_id) const;

    uint64_t seed_ = 1;
    std::map<std::string, Node> nodes_;
    std::map<std::string, LinkState> links_;
    std::vector<FailureDecl> failure_schedule_;
    std::optional<int64_t> access_min_balance_;
    std::optional<ScenarioDecl> scenario_;

    // run state
    std::priority_queue<Hop, std::vector<Hop>, HopAfter> queue_;
    uint64_t now_ = 0;
    uint64_t next_seq_ = 0;
    std::unique_ptr<SeededRng> rng_;
    Trace trace_;
    Stage stage_ = Stage::Idle;
    std::string caller_, callee_;
    bool finished_ = false;
};

}  // namespace beran
