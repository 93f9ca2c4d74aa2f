//! Built-in graphs, missingness graphs, structural models and tables,
//! addressable by short names such as `fig4c` or `setup5`.

use crate::graph::{parse_dag, Dag};
use crate::ident::{CausalQuery, IdentError};
use crate::missing::MDag;
use crate::scm::{plogis, Estimand, StructuralModel};
use crate::tables::StratifiedTable;

/// A named causal graph plus the nodes it treats as unmeasured or
/// conditioned on by design.
#[derive(Debug, Clone, Copy)]
pub struct DagFixture {
    pub name: &'static str,
    pub title: &'static str,
    pub text: &'static str,
    pub unmeasured: &'static [&'static str],
    pub conditioned: &'static [&'static str],
}

impl DagFixture {
    pub fn dag(&self) -> Dag {
        parse_dag(self.text).expect("built-in graph parses")
    }

    /// Query using the graph's own exposure/outcome and the fixture's
    /// unmeasured and conditioned nodes.
    pub fn query(&self) -> Result<CausalQuery, IdentError> {
        CausalQuery::from_designations(self.dag())?
            .with_unmeasured(self.unmeasured)?
            .with_conditioned(self.conditioned)
    }
}

macro_rules! dag {
    ($name:literal, $title:literal, $text:literal) => {
        dag!($name, $title, $text, [], [])
    };
    ($name:literal, $title:literal, $text:literal, [$($u:literal),*], [$($c:literal),*]) => {
        DagFixture {
            name: $name,
            title: $title,
            text: $text,
            unmeasured: &[$($u),*],
            conditioned: &[$($c),*],
        }
    };
}

pub const DAGS: &[DagFixture] = &[
    dag!("fig1a", "single confounder", "L -> A\nA -> Y\nL -> Y\nexposure: A\noutcome: Y\n"),
    dag!("fig1b", "collider without an effect", "A -> L\nY -> L\nexposure: A\noutcome: Y\n"),
    dag!(
        "fig1c",
        "two confounders and an unmeasured cause of the outcome",
        "L1 -> A\nL1 -> L2\nU -> L2\nU -> Y\nL2 -> A\nL2 -> Y\nA -> Y\nexposure: A\noutcome: Y\n",
        ["U"],
        []
    ),
    dag!("fig2a", "measured confounder", "L -> A\nA -> Y\nL -> Y\nexposure: A\noutcome: Y\n"),
    dag!(
        "fig2b",
        "unmeasured confounder",
        "U -> A\nA -> Y\nU -> Y\nexposure: A\noutcome: Y\n",
        ["U"],
        []
    ),
    dag!("fig2c", "randomized exposure", "A -> Y\nL -> Y\nexposure: A\noutcome: Y\n"),
    dag!(
        "fig3",
        "confounder with a non-linear term",
        "L -> A\nL2 -> A\nL -> Y\nL2 -> Y\nA -> Y\nL -> L2\nexposure: A\noutcome: Y\n"
    ),
    dag!("fig4a", "unconditioned collider", "A -> L\nY -> L\nexposure: A\noutcome: Y\n"),
    dag!(
        "fig4b",
        "conditioned collider",
        "A -> L\nY -> L\nexposure: A\noutcome: Y\n",
        [],
        ["L"]
    ),
    dag!(
        "fig4c",
        "selection on a collider",
        "A -> C\nL -> C\nU -> L\nU -> Y\nexposure: A\noutcome: Y\n",
        ["U"],
        ["C"]
    ),
    dag!(
        "fig4d",
        "collider between exposure and an unmeasured cause",
        "A -> L2\nL1 -> A\nU -> L2\nU -> Y\nL1 -> L2\nL2 -> Y\nA -> Y\nexposure: A\noutcome: Y\n",
        ["U"],
        []
    ),
    dag!("fig6a", "mediator", "A -> M\nM -> Y\nA -> Y\nexposure: A\noutcome: Y\n"),
    dag!(
        "fig6b",
        "post-exposure variable off the causal path",
        "U -> A\nU -> L\nL -> Y\nA -> Y\nexposure: A\noutcome: Y\n",
        ["U"],
        []
    ),
    dag!(
        "fig6c",
        "descendant of a mediator",
        "A -> M\nM -> L\nM -> Y\nA -> Y\nexposure: A\noutcome: Y\n"
    ),
    dag!(
        "fig6d",
        "cause of a mediator",
        "A -> M\nL -> M\nM -> Y\nA -> Y\nexposure: A\noutcome: Y\n"
    ),
    dag!("fig7a", "setups 1, 2 and 4", "L -> A\nA -> Y\nL -> Y\nexposure: A\noutcome: Y\n"),
    dag!(
        "fig7b",
        "setup 3",
        "L -> A\nL -> Y\nA -> Y\nY -> L2\nA -> L2\nexposure: A\noutcome: Y\n"
    ),
    dag!("fig7c", "setups 4b and 5", "A -> Y\nL -> Y\nexposure: A\noutcome: Y\n"),
    dag!("fig7d", "setup 6", "A -> M\nM -> Y\nA -> Y\nexposure: A\noutcome: Y\n"),
    dag!(
        "fig8a",
        "selection on a cause of the exposure",
        "A -> Y\nL2 -> Y\nL2 -> A\nL1 -> A\nL1 -> S\nexposure: A\noutcome: Y\n",
        [],
        ["S"]
    ),
    dag!(
        "fig8b",
        "selection on a cause of the outcome",
        "A -> Y\nL2 -> Y\nL2 -> A\nL1 -> Y\nL1 -> S\nexposure: A\noutcome: Y\n",
        [],
        ["S"]
    ),
    dag!(
        "fig8c",
        "selection on a collider (M-bias)",
        "A -> Y\nL2 -> Y\nL1 -> L2\nL1 -> A\nL1 -> S\nL2 -> S\nexposure: A\noutcome: Y\n",
        [],
        ["S"]
    ),
    dag!(
        "fig8d",
        "two-stage selection",
        "A -> Y\nL2 -> Y\nL2 -> A\nL1 -> A\nL1 -> S1\nL2 -> S2\nL2 -> S1\nS1 -> S2\nexposure: A\noutcome: Y\n",
        [],
        ["S1", "S2"]
    ),
    dag!(
        "fig9a",
        "error in the outcome",
        "U_Y -> Ystar\nY -> Ystar\nA -> Y\nexposure: A\noutcome: Y\n",
        ["U_Y"],
        []
    ),
    dag!(
        "fig9b",
        "differential error in exposure and outcome",
        "U_A -> Astar\nU_Y -> Ystar\nA -> Astar\nY -> Ystar\nA -> Y\nY -> U_A\nexposure: A\noutcome: Y\n",
        ["U_A", "U_Y"],
        []
    ),
    dag!(
        "fig9c",
        "confounder measured with error",
        "L -> Lstar\nL -> A\nA -> Y\nL -> Y\nexposure: A\noutcome: Y\n",
        ["L"],
        []
    ),
    dag!(
        "fig9d",
        "error-prone measurement drives treatment",
        "L -> Lstar\nLstar -> A\nLstar -> Y\nA -> Y\nL -> Y\nexposure: A\noutcome: Y\n",
        ["L"],
        []
    ),
    dag!(
        "compliance",
        "assigned versus received treatment",
        "A_assigned -> A\nA -> Y\nU -> Y\nU -> A\nexposure: A\noutcome: Y\n",
        ["U"],
        []
    ),
];

pub fn dag_fixture(name: &str) -> Option<&'static DagFixture> {
    DAGS.iter().find(|f| f.name == name)
}

pub const FIG5_MDAG: &str = "\
L1 -> A
L2 -> A
A -> Y
L1 -> C_A
L2 -> C_A
L1 -> C_L2
A -> C_L2
L1 -> C_Y
L2 -> C_Y
A -> C_Y
missing: A -> C_A
missing: L2 -> C_L2
missing: Y -> C_Y
exposure: A
outcome: Y
";

pub fn mdag_fixture(name: &str) -> Option<MDag> {
    match name {
        "fig5" => Some(MDag::parse(FIG5_MDAG).expect("built-in m-DAG parses")),
        _ => None,
    }
}

/// A data-generating model with its exposure, outcome and, where one is
/// available in closed form, the true causal contrast.
#[derive(Debug, Clone, Copy)]
pub struct ModelFixture {
    pub name: &'static str,
    pub title: &'static str,
    pub text: &'static str,
    pub exposure: &'static str,
    pub outcome: &'static str,
    pub estimand: Estimand,
    /// Graph fixture whose structure the model induces.
    pub graph: &'static str,
    exact: Option<fn() -> f64>,
}

impl ModelFixture {
    pub fn model(&self) -> StructuralModel {
        StructuralModel::parse(self.text)
            .expect("built-in model parses")
            .with_name(self.name)
    }

    pub fn exact_effect(&self) -> Option<f64> {
        self.exact.map(|f| f())
    }
}

// Unstated standard deviations are 1.
pub const MODELS: &[ModelFixture] = &[
    ModelFixture {
        name: "setup1",
        title: "confounding, correctly specified",
        text: "L ~ normal(1, 1)\nA ~ bernoulli(plogis(-0.5 + 2*L))\nY ~ normal(2 + A + 3*L, 1)\n",
        exposure: "A",
        outcome: "Y",
        estimand: Estimand::Ate,
        graph: "fig7a",
        exact: Some(|| 1.0),
    },
    ModelFixture {
        name: "setup2",
        title: "non-linear confounder effect",
        text: "L ~ normal(1, 1)\nA ~ bernoulli(plogis(-0.5 + 2*L))\nY ~ normal(2 + A + 0.5*L^2, 1)\n",
        exposure: "A",
        outcome: "Y",
        estimand: Estimand::Ate,
        graph: "fig7a",
        exact: Some(|| 1.0),
    },
    ModelFixture {
        name: "setup3",
        title: "collider",
        text: "L ~ normal(1, 1)\nA ~ bernoulli(plogis(-0.5 + 2*L))\nY ~ normal(2 + A + 3*L, 1)\nL2 ~ normal(Y*A, 1)\n",
        exposure: "A",
        outcome: "Y",
        estimand: Estimand::Ate,
        graph: "fig7b",
        exact: Some(|| 1.0),
    },
    ModelFixture {
        name: "setup4",
        title: "effect modification, confounded",
        text: "L ~ normal(1, 1)\nA ~ bernoulli(plogis(-0.5 + 2*L))\nY ~ normal(2 + A + 3*L + A*L, 1)\n",
        exposure: "A",
        outcome: "Y",
        estimand: Estimand::Ate,
        graph: "fig7a",
        // 1 + E[L]
        exact: Some(|| 2.0),
    },
    ModelFixture {
        name: "setup4b",
        title: "effect modification, randomized",
        text: "L ~ normal(1, 1)\nA ~ bernoulli(plogis(-0.5))\nY ~ normal(2 + A + 3*L + A*L, 1)\n",
        exposure: "A",
        outcome: "Y",
        estimand: Estimand::Ate,
        graph: "fig7c",
        exact: Some(|| 2.0),
    },
    ModelFixture {
        name: "setup5",
        title: "binary outcome, randomized",
        text: "L ~ normal(1, 1)\nA ~ bernoulli(0.5)\nY ~ bernoulli(plogis(A + L))\n",
        exposure: "A",
        outcome: "Y",
        estimand: Estimand::LogMor,
        graph: "fig7c",
        exact: None,
    },
    ModelFixture {
        name: "setup6",
        title: "binary mediator",
        text: "A ~ bernoulli(plogis(-0.5))\nM ~ bernoulli(plogis(0.5 - 2*A))\nY ~ normal(2 + M + A, 1)\n",
        exposure: "A",
        outcome: "Y",
        estimand: Estimand::Ate,
        graph: "fig7d",
        exact: Some(|| 1.0 + plogis(-1.5) - plogis(0.5)),
    },
    ModelFixture {
        name: "setup7",
        title: "missing not at random, complete cases",
        text: "\
L1 ~ normal(1, 1)
L2 ~ normal(-1, 1)
A ~ bernoulli(plogis(-0.5 + 2*L1 + L2))
C_A ~ bernoulli(plogis(1.5 + 0.5*L1 + 0.5*L2))
C_L2 ~ bernoulli(plogis(1.5 - 0.75*L1 + 0.75*A))
Y ~ normal(2 + A, 1)
C_Y ~ bernoulli(plogis(1.5 + 0.25*L1 + 0.25*L2 + 0.5*A))
",
        exposure: "A",
        outcome: "Y",
        estimand: Estimand::Ate,
        graph: "fig5",
        exact: Some(|| 1.0),
    },
];

pub fn model_fixture(name: &str) -> Option<&'static ModelFixture> {
    MODELS.iter().find(|f| f.name == name)
}

pub fn table_fixture(name: &str) -> Option<StratifiedTable> {
    match name {
        "table1" => Some(StratifiedTable::table1()),
        _ => None,
    }
}

/// Every fixture name, grouped by kind.
pub fn names() -> Vec<(&'static str, Vec<&'static str>)> {
    vec![
        ("dag", DAGS.iter().map(|f| f.name).collect()),
        ("mdag", vec!["fig5"]),
        ("model", MODELS.iter().map(|f| f.name).collect()),
        ("table", vec!["table1"]),
    ]
}
