use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedQuery {
    pub id: String,
    pub family: String,
    pub sql: String,
}

impl NamedQuery {
    fn new(id: impl Into<String>, family: &str, sql: impl Into<String>) -> Self {
        NamedQuery {
            id: id.into(),
            family: family.to_string(),
            sql: sql.into(),
        }
    }
}

fn quoted(values: &[&str]) -> String {
    values.iter().map(|v| format!("'{v}'")).collect::<Vec<_>>().join(", ")
}

/// keyword, movie_keyword, title, cast_info, name.
fn kw_cast(id: &str, keywords: &[&str], name_like: &str, year: i64) -> NamedQuery {
    NamedQuery::new(
        id,
        "kw-cast",
        format!(
            "SELECT MIN(k.keyword) AS movie_keyword, MIN(n.name) AS actor_name, MIN(t.title) AS hero_movie \
             FROM cast_info AS ci, keyword AS k, movie_keyword AS mk, name AS n, title AS t \
             WHERE k.keyword IN ({}) AND n.name LIKE '{name_like}' AND t.production_year > {year} \
             AND k.id = mk.keyword_id AND t.id = mk.movie_id AND t.id = ci.movie_id \
             AND ci.movie_id = mk.movie_id AND n.id = ci.person_id",
            quoted(keywords)
        ),
    )
}

/// title, movie_keyword, keyword, movie_companies, company_name, movie_info,
/// info_type.
fn kw_company_info(id: &str, keyword: &str, country: &str, info: &str, genres: &[&str]) -> NamedQuery {
    NamedQuery::new(
        id,
        "kw-company-info",
        format!(
            "SELECT MIN(cn.name) AS company, MIN(mi.info) AS info, MIN(t.title) AS movie \
             FROM company_name AS cn, info_type AS it, keyword AS k, movie_companies AS mc, \
             movie_info AS mi, movie_keyword AS mk, title AS t \
             WHERE cn.country_code = '{country}' AND it.info = '{info}' AND k.keyword = '{keyword}' \
             AND mi.info IN ({}) \
             AND t.id = mk.movie_id AND t.id = mc.movie_id AND t.id = mi.movie_id \
             AND mk.movie_id = mc.movie_id AND mk.movie_id = mi.movie_id AND mc.movie_id = mi.movie_id \
             AND k.id = mk.keyword_id AND cn.id = mc.company_id AND it.id = mi.info_type_id",
            quoted(genres)
        ),
    )
}

/// cast_info, info_type x2, movie_info, movie_info_idx, name, title.
fn cast_budget_votes(id: &str, notes: &[&str], gender: &str, name_like: &str, info: &str) -> NamedQuery {
    NamedQuery::new(
        id,
        "cast-budget-votes",
        format!(
            "SELECT MIN(mi.info) AS movie_budget, MIN(mi_idx.info) AS movie_votes, MIN(t.title) AS movie_title \
             FROM cast_info AS ci, info_type AS it1, info_type AS it2, movie_info AS mi, \
             movie_info_idx AS mi_idx, name AS n, title AS t \
             WHERE ci.note IN ({}) AND it1.info = '{info}' AND it2.info = 'votes' \
             AND n.gender = '{gender}' AND n.name LIKE '{name_like}' \
             AND t.id = mi.movie_id AND t.id = mi_idx.movie_id AND t.id = ci.movie_id \
             AND ci.movie_id = mi.movie_id AND ci.movie_id = mi_idx.movie_id \
             AND mi.movie_id = mi_idx.movie_id AND n.id = ci.person_id \
             AND it1.id = mi.info_type_id AND it2.id = mi_idx.info_type_id",
            quoted(notes)
        ),
    )
}

/// kind_type, title, movie_keyword, keyword.
fn kind_kw(id: &str, kind: &str, keyword_like: &str, year: i64) -> NamedQuery {
    NamedQuery::new(
        id,
        "kind-kw",
        format!(
            "SELECT MIN(t.title) AS movie_title, MIN(k.keyword) AS kw \
             FROM keyword AS k, kind_type AS kt, movie_keyword AS mk, title AS t \
             WHERE kt.kind = '{kind}' AND k.keyword LIKE '{keyword_like}' AND t.production_year > {year} \
             AND kt.id = t.kind_id AND t.id = mk.movie_id AND k.id = mk.keyword_id"
        ),
    )
}

/// kind_type, title, movie_keyword, keyword, cast_info, name, movie_companies,
/// company_name.
fn kw_cast_company(id: &str, keywords: &[&str], role: i64, country: &str, kind: &str) -> NamedQuery {
    NamedQuery::new(
        id,
        "kw-cast-company",
        format!(
            "SELECT MIN(n.name) AS member, MIN(cn.name) AS studio, MIN(t.title) AS movie \
             FROM cast_info AS ci, company_name AS cn, keyword AS k, kind_type AS kt, \
             movie_companies AS mc, movie_keyword AS mk, name AS n, title AS t \
             WHERE k.keyword IN ({}) AND ci.role_id = {role} AND cn.country_code = '{country}' \
             AND kt.kind = '{kind}' \
             AND kt.id = t.kind_id AND t.id = mk.movie_id AND t.id = ci.movie_id AND t.id = mc.movie_id \
             AND mk.movie_id = ci.movie_id AND mk.movie_id = mc.movie_id AND ci.movie_id = mc.movie_id \
             AND k.id = mk.keyword_id AND n.id = ci.person_id AND cn.id = mc.company_id",
            quoted(keywords)
        ),
    )
}

/// Nine or ten relations: keyword, cast and info branches around title.
fn wide(id: &str, keywords: &[&str], info: &str, rank_info: &str, with_kind: bool, year: i64) -> NamedQuery {
    let (kind_from, kind_where) = if with_kind {
        (", kind_type AS kt", " AND kt.kind = 'movie' AND kt.id = t.kind_id")
    } else {
        ("", "")
    };
    NamedQuery::new(
        id,
        "wide",
        format!(
            "SELECT MIN(mi.info) AS info, MIN(mi_idx.info) AS rank_info, MIN(n.name) AS person, MIN(t.title) AS movie \
             FROM cast_info AS ci, info_type AS it1, info_type AS it2, keyword AS k, movie_info AS mi, \
             movie_info_idx AS mi_idx, movie_keyword AS mk, name AS n, title AS t{kind_from} \
             WHERE k.keyword IN ({}) AND it1.info = '{info}' AND it2.info = '{rank_info}' \
             AND n.gender = 'f' AND t.production_year > {year}{kind_where} \
             AND t.id = mk.movie_id AND t.id = ci.movie_id AND t.id = mi.movie_id AND t.id = mi_idx.movie_id \
             AND mk.movie_id = ci.movie_id AND mi.movie_id = mi_idx.movie_id AND ci.movie_id = mi.movie_id \
             AND k.id = mk.keyword_id AND n.id = ci.person_id \
             AND it1.id = mi.info_type_id AND it2.id = mi_idx.info_type_id",
            quoted(keywords)
        ),
    )
}

const MARVEL: [&str; 5] = ["superhero", "sequel", "second-part", "marvel-comics", "based-on-comic"];
const VIOLENT: [&str; 4] = ["fight", "violence", "murder", "blood"];

/// The star-schema benchmark corpus: 4- to 10-way joins with redundant
/// transitive join predicates on movie ids.
pub fn star_corpus() -> Vec<NamedQuery> {
    let mut out = vec![
        kw_cast("1a", &MARVEL, "%Downey%Robert%", 2000),
        kw_cast("1b", &MARVEL, "%Evans%", 2000),
        kw_cast("1c", &["superhero", "marvel-comics"], "%Johansson%", 1990),
        kw_cast("1d", &VIOLENT, "%Smith%", 1950),
        kw_cast("1e", &["character-name-in-title"], "%Hill%", 2005),
        kw_cast("1f", &["sequel", "revenge", "tv-special"], "%Jackson%", 1980),
        kw_cast("1g", &["murder"], "%Brown, Mary%", 1920),
        kw_company_info("2a", "superhero", "[us]", "genres", &["Action", "Sci-Fi"]),
        kw_company_info("2b", "sequel", "[us]", "genres", &["Adventure"]),
        kw_company_info("2c", "fight", "[us]", "countries", &["USA"]),
        kw_company_info("2d", "based-on-comic", "[gb]", "genres", &["Drama", "Action"]),
        kw_company_info("2e", "violence", "[us]", "genres", &["Fantasy", "Action"]),
        kw_company_info("2f", "marvel-comics", "[de]", "countries", &["USA", "Germany"]),
        kw_company_info("2g", "love-story", "[us]", "genres", &["Romance"]),
        cast_budget_votes("3a", &["(producer)", "(executive producer)"], "m", "%Tim%", "budget"),
        cast_budget_votes("3b", &["(executive producer)"], "m", "%Robert%", "budget"),
        cast_budget_votes("3c", &["(producer)", "(executive producer)"], "f", "%Mary%", "budget"),
        cast_budget_votes("3d", &["(voice)"], "m", "%Chris%", "genres"),
        cast_budget_votes("3e", &["(executive producer)"], "f", "%Scarlett%", "budget"),
        cast_budget_votes("3f", &["(uncredited)"], "m", "%James%", "countries"),
        kind_kw("4a", "movie", "%sequel%", 2005),
        kind_kw("4b", "movie", "%super%", 2000),
        kind_kw("4c", "episode", "%love%", 1990),
        kind_kw("4d", "tv series", "%fight%", 1950),
        kind_kw("4e", "movie", "%murder%", 2010),
        kw_cast_company("5a", &MARVEL, 1, "[us]", "movie"),
        kw_cast_company("5b", &["superhero"], 2, "[us]", "movie"),
        kw_cast_company("5c", &VIOLENT, 1, "[us]", "movie"),
        kw_cast_company("5d", &["sequel", "second-part"], 3, "[us]", "movie"),
        kw_cast_company("5e", &["murder", "blood"], 1, "[jp]", "episode"),
        kw_cast_company("5f", &["based-on-comic"], 8, "[us]", "movie"),
        wide("6a", &MARVEL, "budget", "top 250 rank", false, 2000),
        wide("6b", &MARVEL, "budget", "top 250 rank", true, 2000),
        wide("6c", &VIOLENT, "genres", "rating", false, 2005),
        wide("6d", &["superhero", "sequel"], "countries", "votes", true, 1990),
        wide("6e", &["revenge", "murder"], "budget", "votes", true, 1980),
        wide(
            "6f",
            &["tv-special", "fight"],
            "release dates",
            "top 250 rank",
            false,
            1995,
        ),
    ];
    out.push(NamedQuery::new(
        "7a",
        "mixed",
        "SELECT MIN(t.title) AS movie, MIN(cn.name) AS studio \
         FROM company_name AS cn, movie_companies AS mc, movie_info_idx AS mi_idx, info_type AS it, title AS t \
         WHERE cn.country_code = '[us]' AND it.info = 'top 250 rank' AND mc.note = '(presents)' \
         AND t.id = mc.movie_id AND t.id = mi_idx.movie_id AND mc.movie_id = mi_idx.movie_id \
         AND cn.id = mc.company_id AND it.id = mi_idx.info_type_id",
    ));
    out.push(NamedQuery::new(
        "7b",
        "mixed",
        "SELECT MIN(n.name) AS voice_actor, MIN(t.title) AS movie \
         FROM cast_info AS ci, movie_keyword AS mk, keyword AS k, name AS n, title AS t, kind_type AS kt \
         WHERE ci.note = '(voice)' AND k.keyword = 'superhero' AND kt.kind = 'movie' \
         AND kt.id = t.kind_id AND t.id = ci.movie_id AND t.id = mk.movie_id AND ci.movie_id = mk.movie_id \
         AND k.id = mk.keyword_id AND n.id = ci.person_id",
    ));
    out.push(NamedQuery::new(
        "7c",
        "mixed",
        "SELECT MIN(t.title) AS movie, MIN(mi.info) AS release \
         FROM movie_info AS mi, info_type AS it, movie_keyword AS mk, keyword AS k, title AS t \
         WHERE it.info = 'release dates' AND mi.info LIKE 'USA:%' AND k.keyword IN ('sequel', 'fight') \
         AND t.production_year > 2000 \
         AND t.id = mi.movie_id AND t.id = mk.movie_id AND mi.movie_id = mk.movie_id \
         AND it.id = mi.info_type_id AND k.id = mk.keyword_id",
    ));
    out
}

pub fn stocks_queries() -> Vec<NamedQuery> {
    vec![
        NamedQuery::new(
            "s1",
            "stocks",
            "SELECT MIN(t.shares) AS smallest FROM companies AS c, trades AS t \
             WHERE c.symbol = 'APPL' AND c.id = t.company_id",
        ),
        NamedQuery::new(
            "s2",
            "stocks",
            "SELECT MIN(t.shares) AS smallest FROM companies AS c, trades AS t \
             WHERE c.symbol IN ('APPL', 'GOOG', 'MSFT') AND c.id = t.company_id",
        ),
        NamedQuery::new(
            "s3",
            "stocks",
            "SELECT MIN(t.shares) AS smallest FROM companies AS c, trades AS t \
             WHERE c.symbol = 'S0900' AND c.id = t.company_id",
        ),
    ]
}

pub fn employee_queries() -> Vec<NamedQuery> {
    vec![
        NamedQuery::new(
            "e1",
            "employees",
            "SELECT MIN(e.id) AS first FROM employees AS e WHERE e.age > 60 AND e.salary > 100000",
        ),
        NamedQuery::new(
            "e2",
            "employees",
            "SELECT MIN(e.id) AS first FROM employees AS e WHERE e.age < 30 AND e.salary < 40000",
        ),
        NamedQuery::new(
            "e3",
            "employees",
            "SELECT MIN(a.id) AS first FROM employees AS a, employees AS b \
             WHERE a.age > 60 AND b.salary > 100000 AND a.id = b.id",
        ),
    ]
}

pub fn chain_queries() -> Vec<NamedQuery> {
    vec![
        NamedQuery::new(
            "c1",
            "chain",
            "SELECT MIN(s.amount) AS smallest FROM region AS r, store AS st, sale AS s \
             WHERE r.tier = 'flagship' AND r.id = st.region_id AND st.id = s.store_id",
        ),
        NamedQuery::new(
            "c2",
            "chain",
            "SELECT MIN(s.amount) AS smallest FROM region AS r, store AS st, sale AS s \
             WHERE r.tier = 'standard' AND s.amount < 50 AND r.id = st.region_id AND st.id = s.store_id",
        ),
    ]
}
