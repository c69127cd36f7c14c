use std::fmt;
use std::str::FromStr;

/// Index of a node in the scenario population. Legit nodes come first,
/// wormhole endpoints after them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for NodeId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(NodeId)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessageId(pub u32);

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.0)
    }
}

impl FromStr for MessageId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('M').unwrap_or(s).parse().map(MessageId)
    }
}

/// Ground-truth role of a node. Only the simulator and the metric code look
/// at this; detection itself never does.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeClass {
    Legit,
    Wormhole { pair: u32 },
}

impl NodeClass {
    pub fn is_legit(self) -> bool {
        matches!(self, NodeClass::Legit)
    }

    pub fn pair(self) -> Option<u32> {
        match self {
            NodeClass::Legit => None,
            NodeClass::Wormhole { pair } => Some(pair),
        }
    }
}
