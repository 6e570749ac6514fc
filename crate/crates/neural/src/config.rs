use std::fmt;
use std::str::FromStr;

use icy_core::Geometry;
use serde::{Deserialize, Serialize};

use crate::{NeuralError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Rnn,
    Gru,
    Lstm,
}

impl CellKind {
    /// Number of `d`-wide gate blocks in the fused weight matrices.
    pub fn gates(self) -> usize {
        match self {
            CellKind::Rnn => 1,
            CellKind::Gru => 3,
            CellKind::Lstm => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Rnn => "rnn",
            CellKind::Gru => "gru",
            CellKind::Lstm => "lstm",
        }
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CellKind {
    type Err = NeuralError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rnn" => Ok(CellKind::Rnn),
            "gru" => Ok(CellKind::Gru),
            "lstm" => Ok(CellKind::Lstm),
            _ => Err(NeuralError::Config(format!("unknown cell type `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Sender,
    Receiver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Arch {
    Fc1l,
    Fc2l,
    RnnA,
    RnnZ,
    GruA,
    GruZ,
    LstmA,
    LstmZ,
    Lstm2A,
    HusendA,
    HusendZ,
    RecvFc2l,
    RecvRnn,
    RecvGru,
    RecvLstm,
    RecvHu,
}

impl Arch {
    pub const ALL: [Arch; 16] = [
        Arch::Fc1l,
        Arch::Fc2l,
        Arch::RnnA,
        Arch::RnnZ,
        Arch::GruA,
        Arch::GruZ,
        Arch::LstmA,
        Arch::LstmZ,
        Arch::Lstm2A,
        Arch::HusendA,
        Arch::HusendZ,
        Arch::RecvFc2l,
        Arch::RecvRnn,
        Arch::RecvGru,
        Arch::RecvLstm,
        Arch::RecvHu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Arch::Fc1l => "FC1L",
            Arch::Fc2l => "FC2L",
            Arch::RnnA => "RNN_A",
            Arch::RnnZ => "RNN_Z",
            Arch::GruA => "GRU_A",
            Arch::GruZ => "GRU_Z",
            Arch::LstmA => "LSTM_A",
            Arch::LstmZ => "LSTM_Z",
            Arch::Lstm2A => "LSTM2_A",
            Arch::HusendA => "HUSEND_A",
            Arch::HusendZ => "HUSEND_Z",
            Arch::RecvFc2l => "RECV_FC2L",
            Arch::RecvRnn => "RECV_RNN",
            Arch::RecvGru => "RECV_GRU",
            Arch::RecvLstm => "RECV_LSTM",
            Arch::RecvHu => "RECV_HU",
        }
    }

    pub fn role(self) -> Role {
        match self {
            Arch::RecvFc2l | Arch::RecvRnn | Arch::RecvGru | Arch::RecvLstm | Arch::RecvHu => Role::Receiver,
            _ => Role::Sender,
        }
    }

    /// Cell used by the plain recurrent architectures.
    pub fn fixed_cell(self) -> Option<CellKind> {
        match self {
            Arch::RnnA | Arch::RnnZ | Arch::RecvRnn => Some(CellKind::Rnn),
            Arch::GruA | Arch::GruZ | Arch::RecvGru => Some(CellKind::Gru),
            Arch::LstmA | Arch::LstmZ | Arch::Lstm2A | Arch::RecvLstm => Some(CellKind::Lstm),
            _ => None,
        }
    }

    /// Whether the previous step's output distribution is fed back as input.
    pub fn autoregressive(self) -> bool {
        matches!(self, Arch::RnnA | Arch::GruA | Arch::LstmA | Arch::Lstm2A | Arch::HusendA)
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = NeuralError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_uppercase().replace('-', "_");
        Arch::ALL
            .into_iter()
            .find(|a| a.name() == norm)
            .ok_or_else(|| NeuralError::Config(format!("unknown architecture `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Arch,
    pub geometry: Geometry,
    pub emb_size: usize,
    /// Stacked recurrent layers for the plain recurrent archs; `LSTM2_A` is always 2.
    pub layers: usize,
    /// Cell for both tracks of the HU models.
    pub inner_rnn: CellKind,
    pub dropout: f64,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(arch: Arch, geometry: Geometry, seed: u64) -> Self {
        ModelConfig {
            arch,
            geometry,
            emb_size: 128,
            layers: if arch == Arch::Lstm2A { 2 } else { 1 },
            inner_rnn: CellKind::Rnn,
            dropout: 0.0,
            seed,
        }
    }

    pub fn with_emb_size(mut self, emb_size: usize) -> Self {
        self.emb_size = emb_size;
        self
    }

    pub fn with_inner_rnn(mut self, cell: CellKind) -> Self {
        self.inner_rnn = cell;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry
            .validate()
            .map_err(|e| NeuralError::Config(e.to_string()))?;
        if self.emb_size == 0 {
            return Err(NeuralError::Config("emb_size must be positive".into()));
        }
        if self.layers == 0 {
            return Err(NeuralError::Config("layers must be positive".into()));
        }
        if self.arch == Arch::Lstm2A && self.layers != 2 {
            return Err(NeuralError::Config("LSTM2_A has exactly 2 layers".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NeuralError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}
