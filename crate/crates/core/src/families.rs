//! Generators for the benchmark protocol families. Each generator is a pure
//! function of its size and returns model source text that includes the
//! formulas to check as named `spec` items.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::frontend::ast::SystemSpec;
use crate::frontend::{parse_system, ParseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Dc,
    Otp,
    RivestOt,
    MsgTransmission,
    Chaum2p,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Dc,
        Family::Otp,
        Family::RivestOt,
        Family::MsgTransmission,
        Family::Chaum2p,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Dc => "dc",
            Family::Otp => "otp",
            Family::RivestOt => "rivest_ot",
            Family::MsgTransmission => "msg_transmission",
            Family::Chaum2p => "chaum2p",
        }
    }

    /// Smallest size the generator accepts.
    pub fn min_size(self) -> usize {
        match self {
            Family::Dc | Family::Chaum2p => 2,
            _ => 1,
        }
    }

    pub fn source(self, n: usize) -> String {
        match self {
            Family::Dc => dining_cryptographers(n),
            Family::Otp => one_time_pad(n),
            Family::RivestOt => rivest_ot(n),
            Family::MsgTransmission => message_transmission(n),
            Family::Chaum2p => chaum_two_phase(n),
        }
    }

    pub fn instance(self, n: usize) -> Result<SystemSpec, ParseError> {
        parse_system(&self.source(n))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown family `{0}` (expected dc, otp, rivest_ot, msg_transmission or chaum2p)")]
pub struct UnknownFamily(pub String);

impl FromStr for Family {
    type Err = UnknownFamily;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| UnknownFamily(s.to_string()))
    }
}

fn list(n: usize, f: impl Fn(usize) -> String) -> String {
    (0..n).map(f).collect::<Vec<_>>().join(", ")
}

fn join(items: impl IntoIterator<Item = String>, op: &str, empty: &str) -> String {
    let v: Vec<String> = items.into_iter().collect();
    if v.is_empty() {
        empty.to_string()
    } else {
        v.join(op)
    }
}

fn at_most_one(n: usize, var: &str) -> String {
    let mut terms = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            terms.push(format!("!({var}{i} & {var}{j})"));
        }
    }
    join(terms, " & ", "1")
}

fn dc_declarations(n: usize, init: &str) -> String {
    let mut s = String::new();
    writeln!(s, "vars: {};", list(n, |i| format!("paid{i}"))).unwrap();
    writeln!(s, "vars: {};", list(n, |i| format!("coin{i}"))).unwrap();
    writeln!(s, "vars: {};", list(n, |i| format!("left{i}"))).unwrap();
    writeln!(s, "vars: {};", list(n, |i| format!("say{i}"))).unwrap();
    let says = list(n, |i| format!("say{i}"));
    for i in 0..n {
        writeln!(
            s,
            "agent C{i} {{\n  observes: paid{i}, coin{i}, left{i}, {says};\n  protocol: rand(coin{i}); left{} := coin{i}; say{i} := paid{i} ^ coin{i} ^ left{i};\n}}",
            (i + 1) % n
        )
        .unwrap();
    }
    writeln!(s, "init: {init};").unwrap();
    s
}

/// C0's view of who paid: either nobody else did, or someone else did but
/// C0 cannot tell who.
fn dc_formula(n: usize, others_paid: &str) -> String {
    let none = join((1..n).map(|j| format!("!paid{j}")), " & ", "1");
    let unknown = join((1..n).map(|j| format!("!Knows C0 paid{j}")), " & ", "1");
    format!("(!paid0 => (Knows C0 ({none}) | (Knows C0 ({others_paid}) & {unknown}))) @ 3")
}

/// Dining cryptographers on a ring of `n`, with the anonymity property
/// checked at time 3.
pub fn dining_cryptographers(n: usize) -> String {
    let mut s = dc_declarations(n, &at_most_one(n, "paid"));
    let some = join((1..n).map(|j| format!("paid{j}")), " | ", "0");
    writeln!(s, "spec anonymity: {};", dc_formula(n, &some)).unwrap();
    s
}

/// The three-agent instance with two formulas: `anonymity`, and `literal`,
/// whose middle disjunction repeats `paid1` instead of covering `paid2`.
pub fn dining_cryptographers_3_literal() -> String {
    let mut s = dining_cryptographers(3);
    writeln!(s, "spec literal: {};", dc_formula(3, "paid1 | paid1")).unwrap();
    s
}

/// Dining cryptographers with coins, left bits and utterances all 0
/// initially, so that only the payer varies at time 0.
pub fn dining_cryptographers_pinned(n: usize) -> String {
    let zeros = join(
        ["coin", "left", "say"]
            .iter()
            .flat_map(|v| (0..n).map(move |i| format!("!{v}{i}"))),
        " & ",
        "1",
    );
    let mut s = dc_declarations(n, &format!("{} & {zeros}", at_most_one(n, "paid")));
    let some = join((1..n).map(|j| format!("paid{j}")), " | ", "0");
    writeln!(s, "spec anonymity: {};", dc_formula(n, &some)).unwrap();
    s
}

/// Alice sends an `n`-bit message to Bob one bit at a time, padded with a
/// key bit the two share. Eve sees only the wire. Bit `j` goes on the wire
/// at step 2j+1 and Bob decodes it at step 2j+2.
pub fn one_time_pad(n: usize) -> String {
    let mut s = String::new();
    writeln!(s, "vars: {};", list(n, |j| format!("m{}", j + 1))).unwrap();
    writeln!(s, "vars: {};", list(n, |j| format!("k{}", j + 1))).unwrap();
    writeln!(s, "vars: {};", list(n, |j| format!("r{}", j + 1))).unwrap();
    writeln!(s, "vars: wire;").unwrap();
    let alice: Vec<String> = (1..=n)
        .flat_map(|j| [format!("wire := m{j} ^ k{j}"), "skip".into()])
        .collect();
    let bob: Vec<String> = (1..=n)
        .flat_map(|j| ["skip".into(), format!("r{j} := wire ^ k{j}")])
        .collect();
    writeln!(
        s,
        "agent Alice {{\n  observes: {}, {}, wire;\n  protocol: {};\n}}",
        list(n, |j| format!("m{}", j + 1)),
        list(n, |j| format!("k{}", j + 1)),
        alice.join("; ")
    )
    .unwrap();
    writeln!(
        s,
        "agent Bob {{\n  observes: {}, {}, wire;\n  protocol: {};\n}}",
        list(n, |j| format!("k{}", j + 1)),
        list(n, |j| format!("r{}", j + 1)),
        bob.join("; ")
    )
    .unwrap();
    writeln!(s, "agent Eve {{\n  observes: wire;\n  protocol: skip;\n}}").unwrap();
    writeln!(
        s,
        "init: !wire & {};",
        join((1..=n).map(|j| format!("!r{j}")), " & ", "1")
    )
    .unwrap();
    writeln!(
        s,
        "spec first_bit: (!Knows Eve m1 & !Knows Eve !m1) @ {};",
        2 * n
    )
    .unwrap();
    s
}

/// Rivest's oblivious transfer of one of two `n`-bit messages with
/// randomness from a trusted initializer, which is folded into Alice's
/// first step. Step 1 deals r0, r1 to Alice and the choice d with r_d to
/// Bob; step 2 Bob sends e = c ^ d; step 3 Alice sends f0 = m0 ^ r_e and
/// f1 = m1 ^ r_(1-e), from which Bob recovers m_c = f_c ^ r_d.
pub fn rivest_ot(n: usize) -> String {
    let bits = |v: &str| list(n, |j| format!("{v}_{}", j + 1));
    let mut s = String::new();
    for v in ["m0", "m1", "r0", "r1", "rd", "f0", "f1"] {
        writeln!(s, "vars: {};", bits(v)).unwrap();
    }
    writeln!(s, "vars: c, d, e;").unwrap();
    let mut deal = Vec::new();
    for j in 1..=n {
        deal.push(format!("rand(r0_{j})"));
        deal.push(format!("rand(r1_{j})"));
    }
    deal.push("rand(d)".into());
    for j in 1..=n {
        deal.push(format!("rd_{j} := (!d & r0_{j}) | (d & r1_{j})"));
    }
    let send: Vec<String> = (1..=n)
        .flat_map(|j| {
            [
                format!("f0_{j} := m0_{j} ^ ((!e & r0_{j}) | (e & r1_{j}))"),
                format!("f1_{j} := m1_{j} ^ ((!e & r1_{j}) | (e & r0_{j}))"),
            ]
        })
        .collect();
    writeln!(
        s,
        "agent Alice {{\n  observes: {}, {}, {}, {}, e, {}, {};\n  protocol: <{}>; skip; <{}>;\n}}",
        bits("m0"),
        bits("m1"),
        bits("r0"),
        bits("r1"),
        bits("f0"),
        bits("f1"),
        deal.join("; "),
        send.join("; ")
    )
    .unwrap();
    writeln!(
        s,
        "agent Bob {{\n  observes: c, d, {}, e, {}, {};\n  protocol: skip; e := c ^ d; skip;\n}}",
        bits("rd"),
        bits("f0"),
        bits("f1")
    )
    .unwrap();
    let zero: Vec<String> = ["r0", "r1", "rd", "f0", "f1"]
        .iter()
        .flat_map(|v| (1..=n).map(move |j| format!("!{v}_{j}")))
        .chain(["!d".to_string(), "!e".to_string()])
        .collect();
    writeln!(s, "init: {};", zero.join(" & ")).unwrap();
    let hidden = |j: usize| format!("(!Knows Bob m0_{j} & !Knows Bob !m0_{j})");
    writeln!(s, "spec first_bit: (c => {}) @ 3;", hidden(1)).unwrap();
    writeln!(
        s,
        "spec all_bits: (c => ({})) @ 3;",
        join((1..=n).map(hidden), " & ", "1")
    )
    .unwrap();
    s
}

/// Alice sends one bit over a channel that delivers it after a delay of
/// between 1 and `n` steps, chosen nondeterministically. A unary clock
/// t1..tn forces delivery on the last step. The formula nests knowledge
/// five deep about delivery at time n+1.
pub fn message_transmission(n: usize) -> String {
    let mut s = String::new();
    writeln!(s, "vars: m, sent, recv, val, d, deliver;").unwrap();
    writeln!(s, "vars: {};", list(n, |j| format!("t{}", j + 1))).unwrap();
    let idle = vec!["skip"; n];
    writeln!(
        s,
        "agent Alice {{\n  observes: m, sent;\n  protocol: sent := 1; {};\n}}",
        idle.join("; ")
    )
    .unwrap();
    writeln!(
        s,
        "agent Bob {{\n  observes: recv, val;\n  protocol: {};\n}}",
        vec!["skip"; n + 1].join("; ")
    )
    .unwrap();
    let mut env = vec![
        "rand(d)".to_string(),
        format!("deliver := !recv & sent & (d | t{n})"),
    ];
    env.push("val := (deliver & m) | (!deliver & val)".into());
    env.push("recv := recv | deliver".into());
    for j in (2..=n).rev() {
        env.push(format!("t{j} := t{}", j - 1));
    }
    env.push("t1 := 1".into());
    env.push("d := 0".into());
    env.push("deliver := 0".into());
    writeln!(s, "env {{ {}; }}", env.join("; ")).unwrap();
    let zero: Vec<String> = ["sent", "recv", "val", "d", "deliver"]
        .iter()
        .map(|v| format!("!{v}"))
        .chain((1..=n).map(|j| format!("!t{j}")))
        .collect();
    writeln!(s, "init: {};", zero.join(" & ")).unwrap();
    writeln!(
        s,
        "spec nested: (Knows Alice Knows Bob Knows Alice Knows Bob Knows Alice recv) @ {};",
        n + 1
    )
    .unwrap();
    s
}

/// Chaum's two-phase anonymous broadcast among `n` agents. Agent i wants
/// to send (`w{i}`) the bit `m{i}`, transmitted as the pair `(m, !m)` so
/// that colliding senders show up as `(1, 1)` or `(0, 0)`. Each round of
/// the dining cryptographers protocol is modeled by its ideal outcome: only
/// the exclusive-or of the contributions becomes public, computed one step
/// later by a `Net` agent that acts before everyone else.
///
/// Booking round k runs at step k+1: every agent that wants to send bids
/// for slot k or not at random. A bidder holds slot k if the round came
/// out 1. In slot round k every holder contributes its pair at step n+2+k, the
/// result is public after step n+3+k, and at step n+4+k each agent sets
/// `rcvd1` if the slot was not its own and carried a clean 1.
pub fn chaum_two_phase(n: usize) -> String {
    let mut s = String::new();
    let per_agent = |v: &str| list(n, |i| format!("{v}{i}"));
    for v in ["w", "m", "rcvd1_", "ca", "cb"] {
        writeln!(s, "vars: {};", per_agent(v)).unwrap();
    }
    for i in 0..n {
        writeln!(s, "vars: {};", list(n, |k| format!("bk{i}_{k}"))).unwrap();
    }
    for v in ["book", "outa", "outb"] {
        writeln!(s, "vars: {};", per_agent(v)).unwrap();
    }
    writeln!(s, "vars: x;").unwrap();
    let horizon = 2 * n + 3;

    let xor = |f: &dyn Fn(usize) -> String| join((0..n).map(f), " ^ ", "0");
    let mut net = vec!["skip".to_string(); horizon];
    for k in 0..n {
        net[k + 1] = format!("book{k} := {}", xor(&|i| format!("bk{i}_{k}")));
        net[n + 2 + k] = format!(
            "<outa{k} := {}; outb{k} := {}>",
            xor(&|i| format!("ca{i}")),
            xor(&|i| format!("cb{i}"))
        );
    }
    writeln!(s, "agent Net {{\n  protocol: {};\n}}", net.join("; ")).unwrap();

    let public = format!(
        "{}, {}, {}",
        per_agent("book"),
        per_agent("outa"),
        per_agent("outb")
    );
    for i in 0..n {
        let mut steps = vec!["skip".to_string(); horizon];
        for k in 0..n {
            steps[k] = format!("<rand(x); bk{i}_{k} := w{i} & x; x := 0>");
            let held = format!("bk{i}_{k} & book{k}");
            steps[n + 1 + k] = format!("<ca{i} := {held} & m{i}; cb{i} := {held} & !m{i}>");
            steps[n + 3 + k] = format!("rcvd1_{i} := rcvd1_{i} | (!({held}) & outa{k} & !outb{k})");
        }
        writeln!(
            s,
            "agent A{i} {{\n  observes: w{i}, m{i}, rcvd1_{i}, ca{i}, cb{i}, {}, {public};\n  protocol: {};\n}}",
            list(n, |k| format!("bk{i}_{k}")),
            steps.join("; ")
        )
        .unwrap();
    }

    let zero: Vec<String> = ["rcvd1_", "ca", "cb", "book", "outa", "outb"]
        .iter()
        .flat_map(|v| (0..n).map(move |i| format!("!{v}{i}")))
        .chain((0..n).flat_map(|i| (0..n).map(move |k| format!("!bk{i}_{k}"))))
        .chain(["!x".to_string()])
        .collect();
    writeln!(s, "init: {};", zero.join(" & ")).unwrap();
    let senders = join((1..n).map(|j| format!("(w{j} & m{j})")), " | ", "0");
    writeln!(
        s,
        "spec rcvd1: (rcvd1_0 <=> Knows A0 ({senders})) @ {horizon};"
    )
    .unwrap();
    s
}
