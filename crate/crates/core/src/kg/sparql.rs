//! SPARQL endpoint client issuing the three fixed Freebase queries.

use std::collections::HashMap;
use std::time::Duration;

use serde::Deserialize;

use super::{Direction, EntityId, KgSource, NeighborRecord, UNNAMED_ENTITY};
use crate::error::{Error, Result};

const FREEBASE_NS: &str = "http://rdf.freebase.com/ns/";
const SPARQL_RESULTS_JSON: &str = "application/sparql-results+json";

/// 1-hop entity and relation search.
pub fn one_hop_query(id: &str) -> String {
    format!(
        r#"PREFIX ns: <http://rdf.freebase.com/ns/>
SELECT ?relation ?connectedEntity ?direction
WHERE {{
    {{
        ns:{id} ?relation ?connectedEntity .
        BIND("tail" AS ?direction)
    }}
    UNION
    {{
        ?connectedEntity ?relation ns:{id} .
        BIND("head" AS ?direction)
    }}
}}
"#
    )
}

/// Short textual description lookup.
///
/// The `owlsameAs` IRI and the trailing whitespace are intentional.
pub fn label_query(id: &str) -> String {
    format!(
        "PREFIX ns: <http://rdf.freebase.com/ns/>\n\
SELECT DISTINCT ?tailEntity\n\
WHERE {{\n\
\x20   {{    \n\
\x20       ?entity ns:type.object.name ?tailEntity .\n\
\x20       FILTER(?entity = ns:{id})  \n\
\x20   }}  \n\
\x20   UNION\n\
\x20   {{    \n\
\x20       ?entity <http://www.w3.org/2002/07/owlsameAs> ?tailEntity .    \n\
\x20       FILTER(?entity = ns:{id})  \n\
\x20   }}\n\
}}\n\
\n"
    )
}

/// 1-hop subgraph search: neighbors together with their English names.
pub fn one_hop_named_query(id: &str) -> String {
    format!(
        r#"PREFIX ns: <http://rdf.freebase.com/ns/>
SELECT ?relation ?connectedEntity ?connectedEntityName ?direction
WHERE {{
    {{
        ns:{id} ?relation ?connectedEntity .
        OPTIONAL {{
            ?connectedEntity ns:type.object.name ?name .
            FILTER(lang(?name) = 'en')
        }}
        BIND(COALESCE(?name, "Unnamed Entity") AS ?connectedEntityName)
        BIND("tail" AS ?direction)
    }}
    UNION
    {{
        ?connectedEntity ?relation ns:{id} .
        OPTIONAL {{
            ?connectedEntity ns:type.object.name ?name .
            FILTER(lang(?name) = 'en')
        }}
        BIND(COALESCE(?name, "Unnamed Entity") AS ?connectedEntityName)
        BIND("head" AS ?direction)
    }}
}}
"#
    )
}

#[derive(Debug, Deserialize)]
struct SelectResults {
    results: Bindings,
}

#[derive(Debug, Deserialize)]
struct Bindings {
    bindings: Vec<HashMap<String, Term>>,
}

#[derive(Debug, Deserialize)]
struct Term {
    value: String,
}

fn strip_ns(value: &str) -> &str {
    value.strip_prefix(FREEBASE_NS).unwrap_or(value)
}

fn parse_neighbor(row: &HashMap<String, Term>) -> Option<NeighborRecord> {
    let relation = strip_ns(&row.get("relation")?.value).to_owned();
    let neighbor = EntityId::new(strip_ns(&row.get("connectedEntity")?.value));
    let direction = Direction::parse(&row.get("direction")?.value)?;
    Some(NeighborRecord {
        relation,
        neighbor,
        direction,
    })
}

/// Client for a SPARQL 1.1 endpoint serving a Freebase-style dump.
///
/// The underlying agent is shareable across threads; concurrent requests are
/// fine. Retries are left to the caller.
#[derive(Clone)]
pub struct SparqlClient {
    endpoint: String,
    agent: ureq::Agent,
}

impl SparqlClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn select(&self, query: &str) -> Result<Vec<HashMap<String, Term>>> {
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Accept", SPARQL_RESULTS_JSON)
            .send_form([("query", query)])
            .map_err(|e| Error::Transport(format!("{}: {e}", self.endpoint)))?;
        let parsed: SelectResults = response
            .body_mut()
            .read_json()
            .map_err(|e| Error::Transport(format!("{}: malformed results: {e}", self.endpoint)))?;
        Ok(parsed.results.bindings)
    }

    /// Neighbors plus English names in one round trip.
    pub fn neighbors_with_names(&self, entity: &EntityId) -> Result<Vec<(NeighborRecord, String)>> {
        let rows = self.select(&one_hop_named_query(entity.as_str()))?;
        Ok(rows
            .iter()
            .filter_map(|row| {
                let record = parse_neighbor(row)?;
                let name = row
                    .get("connectedEntityName")
                    .map(|t| t.value.clone())
                    .unwrap_or_else(|| UNNAMED_ENTITY.to_owned());
                Some((record, name))
            })
            .collect())
    }
}

impl KgSource for SparqlClient {
    fn neighbors(&self, entity: &EntityId) -> Result<Vec<NeighborRecord>> {
        let rows = self.select(&one_hop_query(entity.as_str()))?;
        Ok(rows.iter().filter_map(parse_neighbor).collect())
    }

    fn label(&self, id: &str) -> Result<String> {
        let rows = self.select(&label_query(id))?;
        Ok(rows
            .into_iter()
            .find_map(|mut row| row.remove("tailEntity"))
            .map(|t| t.value)
            .unwrap_or_else(|| {
                // Freebase relation ids read fine on their own.
                if id.contains('.') && !id.starts_with("m.") && !id.starts_with("g.") {
                    id.to_owned()
                } else {
                    UNNAMED_ENTITY.to_owned()
                }
            }))
    }
}
