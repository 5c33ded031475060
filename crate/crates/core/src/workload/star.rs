//! A movie database in the shape of IMDB: `title` at the center, fact tables
//! (`movie_keyword`, `cast_info`, `movie_companies`, `movie_info`,
//! `movie_info_idx`) hanging off it, dimensions behind the facts.
//!
//! Each movie has a hidden popularity drawn from a log-normal. Popular
//! movies get more keywords, cast, companies and release dates, and a small
//! set of blockbusters draws its keywords, stars, studios, genres and budget
//! entries from short "hot" lists. Filters on those dimension values
//! therefore select movies whose fan-out is far above average, which the
//! independence and uniformity assumptions cannot see.

use rand::prelude::*;
use rand_distr::LogNormal;

use super::generators::{weighted, zipf_weights};
use super::GeneratorSpec;
use crate::error::{Error, Result};
use crate::storage::{Catalog, ColumnMeta};
use crate::value::{Row, Value};

pub(crate) const HOT_KEYWORDS: [&str; 12] = [
    "superhero",
    "sequel",
    "second-part",
    "marvel-comics",
    "based-on-comic",
    "tv-special",
    "fight",
    "violence",
    "character-name-in-title",
    "murder",
    "blood",
    "revenge",
];

const KW_A: [&str; 40] = [
    "love", "family", "friend", "death", "police", "money", "war", "school", "father", "mother", "dog", "city",
    "night", "party", "train", "island", "music", "dance", "ghost", "space", "robot", "king", "queen", "hospital",
    "prison", "wedding", "journey", "secret", "letter", "river", "forest", "desert", "storm", "fire", "winter",
    "summer", "village", "ocean", "mountain", "garden",
];
const KW_B: [&str; 25] = [
    "story",
    "scene",
    "relationship",
    "chase",
    "escape",
    "flashback",
    "reference",
    "title",
    "song",
    "dream",
    "battle",
    "trip",
    "loss",
    "rescue",
    "betrayal",
    "crash",
    "game",
    "test",
    "heist",
    "fear",
    "lie",
    "trap",
    "return",
    "photo",
    "kiss",
];

const LAST: [&str; 40] = [
    "Smith", "Johnson", "Brown", "Taylor", "Miller", "Wilson", "Moore", "Anderson", "Thomas", "Jackson", "White",
    "Harris", "Martin", "Thompson", "Garcia", "Martinez", "Robinson", "Clark", "Lewis", "Lee", "Walker", "Hall",
    "Allen", "Young", "King", "Wright", "Scott", "Green", "Baker", "Adams", "Nelson", "Hill", "Campbell", "Mitchell",
    "Roberts", "Carter", "Phillips", "Evans", "Turner", "Torres",
];
const FIRST_M: [&str; 20] = [
    "James", "John", "Robert", "Michael", "William", "David", "Richard", "Joseph", "Charles", "Thomas", "Daniel",
    "Matthew", "Anthony", "Mark", "Paul", "Steven", "Andrew", "Kenneth", "Timothy", "Brian",
];
const FIRST_F: [&str; 20] = [
    "Mary",
    "Patricia",
    "Jennifer",
    "Linda",
    "Elizabeth",
    "Barbara",
    "Susan",
    "Jessica",
    "Sarah",
    "Karen",
    "Nancy",
    "Lisa",
    "Betty",
    "Margaret",
    "Sandra",
    "Ashley",
    "Emily",
    "Donna",
    "Michelle",
    "Carol",
];
const STARS: [(&str, &str); 12] = [
    ("Downey Jr., Robert", "m"),
    ("Evans, Chris", "m"),
    ("Johansson, Scarlett", "f"),
    ("Hemsworth, Chris", "m"),
    ("Ruffalo, Mark", "m"),
    ("Renner, Jeremy", "m"),
    ("Jackson, Samuel L.", "m"),
    ("Paltrow, Gwyneth", "f"),
    ("Larson, Brie", "f"),
    ("Holland, Tom", "m"),
    ("Pratt, Chris", "m"),
    ("Saldana, Zoe", "f"),
];

const KINDS: [&str; 7] = [
    "movie",
    "tv series",
    "tv movie",
    "video movie",
    "tv mini series",
    "video game",
    "episode",
];
const KIND_WEIGHTS: [f64; 7] = [0.35, 0.10, 0.07, 0.08, 0.02, 0.03, 0.35];

pub(crate) const INFO_TYPES: [&str; 24] = [
    "runtimes",
    "color info",
    "genres",
    "languages",
    "certificates",
    "sound mix",
    "tech info",
    "countries",
    "taglines",
    "keywords",
    "alternate versions",
    "crazy credits",
    "goofs",
    "soundtrack",
    "quotes",
    "release dates",
    "trivia",
    "locations",
    "budget",
    "votes",
    "rating",
    "top 250 rank",
    "bottom 10 rank",
    "gross",
];

fn info_type_id(name: &str) -> i64 {
    INFO_TYPES.iter().position(|n| *n == name).expect("known info type") as i64 + 1
}

const GENRES_HOT: [&str; 4] = ["Action", "Adventure", "Sci-Fi", "Fantasy"];
const GENRES_ALL: [&str; 12] = [
    "Drama",
    "Comedy",
    "Documentary",
    "Horror",
    "Thriller",
    "Romance",
    "Short",
    "Family",
    "Action",
    "Crime",
    "Adventure",
    "Sci-Fi",
];
const COUNTRIES: [&str; 10] = [
    "USA", "UK", "Germany", "France", "Japan", "India", "Canada", "Italy", "Spain", "Sweden",
];
const COUNTRY_CODES: [&str; 10] = [
    "[us]", "[gb]", "[de]", "[fr]", "[jp]", "[in]", "[ca]", "[it]", "[es]", "[se]",
];
const COUNTRY_WEIGHTS: [f64; 10] = [0.30, 0.12, 0.10, 0.10, 0.08, 0.08, 0.06, 0.06, 0.05, 0.05];
const LANGUAGES: [&str; 8] = [
    "English", "German", "French", "Japanese", "Hindi", "Italian", "Spanish", "Swedish",
];

const STUDIO_A: [&str; 16] = [
    "Warner",
    "Universal",
    "Paramount",
    "Columbia",
    "Fox",
    "Disney",
    "Lionsgate",
    "Metro",
    "Orion",
    "Miramax",
    "Legendary",
    "Marvel",
    "Pixar",
    "DreamWorks",
    "Summit",
    "Focus",
];
const STUDIO_B: [&str; 6] = ["Pictures", "Studios", "Entertainment", "Films", "Productions", "Media"];

fn kw_name(id: usize) -> String {
    if id <= HOT_KEYWORDS.len() {
        HOT_KEYWORDS[id - 1].to_string()
    } else {
        let i = id - HOT_KEYWORDS.len() - 1;
        let base = format!("{}-{}", KW_A[i % KW_A.len()], KW_B[(i / KW_A.len()) % KW_B.len()]);
        let round = i / (KW_A.len() * KW_B.len());
        if round == 0 {
            base
        } else {
            format!("{base}-{round}")
        }
    }
}

/// Integer count with expectation `lambda`.
fn draw_count(rng: &mut StdRng, lambda: f64) -> usize {
    let floor = lambda.floor();
    floor as usize + usize::from(rng.random::<f64>() < lambda - floor)
}

struct Movie {
    pop: f64,
    hot: bool,
}

fn table(cat: &mut Catalog, name: &str, cols: Vec<ColumnMeta>, rows: Vec<Row>) -> Result<()> {
    cat.create_table(name, cols, rows)?;
    Ok(())
}

pub(crate) fn generate(spec: &GeneratorSpec) -> Result<Catalog> {
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let n_title = spec.size("title");
    let n_name = spec.size("name").max(STARS.len() + 1);
    let n_keyword = spec.size("keyword").max(HOT_KEYWORDS.len() + 1);
    let n_company = spec.size("company_name").max(STUDIO_A.len() + 1);
    let rho = spec.correlation_rho.abs();
    let skew = spec.zipf_s;

    // popularity: log-normal, capped, normalized to mean 1
    let lognormal = LogNormal::new(0.0, 1.0).map_err(|e| Error::InvalidSpec(format!("lognormal: {e}")))?;
    let mut pops: Vec<f64> = (0..n_title)
        .map(|_| {
            let p: f64 = lognormal.sample(&mut rng);
            p.min(40.0)
        })
        .collect();
    let mean = pops.iter().sum::<f64>() / n_title as f64;
    pops.iter_mut().for_each(|p| *p /= mean);
    let mut sorted = pops.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cutoff = sorted[(n_title / 25).min(n_title - 1)];
    let movies: Vec<Movie> = pops
        .into_iter()
        .map(|pop| Movie {
            pop,
            hot: pop >= cutoff,
        })
        .collect();

    let mut cat = Catalog::new();

    table(
        &mut cat,
        "kind_type",
        vec![ColumnMeta::int("id").primary_key(), ColumnMeta::text("kind")],
        KINDS
            .iter()
            .enumerate()
            .map(|(i, k)| vec![Value::Int(i as i64 + 1), Value::text(k)])
            .collect(),
    )?;
    table(
        &mut cat,
        "info_type",
        vec![ColumnMeta::int("id").primary_key(), ColumnMeta::text("info")],
        INFO_TYPES
            .iter()
            .enumerate()
            .map(|(i, k)| vec![Value::Int(i as i64 + 1), Value::text(k)])
            .collect(),
    )?;

    // title
    let kind_pick = weighted(&KIND_WEIGHTS)?;
    let mut titles = Vec::with_capacity(n_title);
    for (i, m) in movies.iter().enumerate() {
        let id = i as i64 + 1;
        let (kind, year) = if m.hot && rng.random::<f64>() < rho {
            let y = if rng.random::<f64>() < 0.9 {
                rng.random_range(2001..=2020)
            } else {
                rng.random_range(1980..=2000)
            };
            (1, y)
        } else {
            (kind_pick.sample(&mut rng) as i64 + 1, rng.random_range(1920..=2020))
        };
        let word = KW_A[rng.random_range(0..KW_A.len())];
        let noun = KW_B[rng.random_range(0..KW_B.len())];
        let title = format!("The {} {} {}", capitalize(word), capitalize(noun), id);
        titles.push(vec![
            Value::Int(id),
            Value::text(title),
            Value::Int(kind),
            Value::Int(year),
        ]);
    }
    table(
        &mut cat,
        "title",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::text("title"),
            ColumnMeta::int("kind_id"),
            ColumnMeta::int("production_year"),
        ],
        titles,
    )?;

    // keyword + movie_keyword
    table(
        &mut cat,
        "keyword",
        vec![ColumnMeta::int("id").primary_key(), ColumnMeta::text("keyword")],
        (1..=n_keyword)
            .map(|id| vec![Value::Int(id as i64), Value::text(kw_name(id))])
            .collect(),
    )?;
    let general_kw = n_keyword - HOT_KEYWORDS.len();
    let mut kw_ranks: Vec<usize> = (HOT_KEYWORDS.len() + 1..=n_keyword).collect();
    kw_ranks.shuffle(&mut rng);
    let kw_pick = weighted(&zipf_weights(general_kw, skew))?;
    let hot_kw_pick = weighted(&zipf_weights(HOT_KEYWORDS.len(), 0.5))?;
    let mut mk = Vec::new();
    for (i, m) in movies.iter().enumerate() {
        let n = draw_count(&mut rng, 3.0 * m.pop);
        for _ in 0..n {
            let hot_rate = if m.hot { 0.5 * rho } else { 0.004 };
            let kw = if rng.random::<f64>() < hot_rate {
                hot_kw_pick.sample(&mut rng) + 1
            } else {
                kw_ranks[kw_pick.sample(&mut rng)]
            };
            mk.push(vec![
                Value::Int(mk.len() as i64 + 1),
                Value::Int(i as i64 + 1),
                Value::Int(kw as i64),
            ]);
        }
    }
    table(
        &mut cat,
        "movie_keyword",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::int("movie_id"),
            ColumnMeta::int("keyword_id"),
        ],
        mk,
    )?;

    // name + cast_info
    let mut names = Vec::with_capacity(n_name);
    for id in 1..=n_name {
        let (name, gender) = if id <= STARS.len() {
            (STARS[id - 1].0.to_string(), Value::text(STARS[id - 1].1))
        } else {
            let last = LAST[rng.random_range(0..LAST.len())];
            let r: f64 = rng.random();
            if r < 0.55 {
                let first = FIRST_M[rng.random_range(0..FIRST_M.len())];
                (format!("{last}, {first}"), Value::text("m"))
            } else if r < 0.9 {
                let first = FIRST_F[rng.random_range(0..FIRST_F.len())];
                (format!("{last}, {first}"), Value::text("f"))
            } else {
                let first = FIRST_M[rng.random_range(0..FIRST_M.len())];
                (format!("{last}, {first}"), Value::Null)
            }
        };
        names.push(vec![Value::Int(id as i64), Value::text(name), gender]);
    }
    table(
        &mut cat,
        "name",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::text("name"),
            ColumnMeta::text("gender"),
        ],
        names,
    )?;
    let general_people = n_name - STARS.len();
    let mut person_ranks: Vec<usize> = (STARS.len() + 1..=n_name).collect();
    person_ranks.shuffle(&mut rng);
    let person_pick = weighted(&zipf_weights(general_people, 0.6 * skew))?;
    let role_pick = weighted(&[0.45, 0.30, 0.08, 0.07, 0.05, 0.05])?;
    const ROLES: [i64; 6] = [1, 2, 3, 4, 5, 8];
    let mut ci = Vec::new();
    for (i, m) in movies.iter().enumerate() {
        let n = draw_count(&mut rng, 5.0 * m.pop);
        for _ in 0..n {
            let person = if m.hot && rng.random::<f64>() < 0.35 * rho {
                rng.random_range(1..=STARS.len())
            } else {
                person_ranks[person_pick.sample(&mut rng)]
            };
            let role = ROLES[role_pick.sample(&mut rng)];
            let r: f64 = rng.random();
            let note = if role == 3 {
                let exec = if m.hot { 0.7 } else { 0.3 };
                Value::text(if r < exec { "(executive producer)" } else { "(producer)" })
            } else if r < 0.05 {
                Value::text("(voice)")
            } else if r < 0.15 {
                Value::text("(uncredited)")
            } else {
                Value::Null
            };
            ci.push(vec![
                Value::Int(ci.len() as i64 + 1),
                Value::Int(person as i64),
                Value::Int(i as i64 + 1),
                Value::Int(role),
                note,
            ]);
        }
    }
    table(
        &mut cat,
        "cast_info",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::int("person_id"),
            ColumnMeta::int("movie_id"),
            ColumnMeta::int("role_id"),
            ColumnMeta::text("note"),
        ],
        ci,
    )?;

    // company_name + movie_companies
    let country_pick = weighted(&COUNTRY_WEIGHTS)?;
    let mut companies = Vec::with_capacity(n_company);
    for id in 1..=n_company {
        let (name, code) = if id <= STUDIO_A.len() {
            (
                format!("{} {}", STUDIO_A[id - 1], STUDIO_B[id % STUDIO_B.len()]),
                Value::text("[us]"),
            )
        } else {
            let a = KW_A[rng.random_range(0..KW_A.len())];
            let b = STUDIO_B[rng.random_range(0..STUDIO_B.len())];
            let code = if rng.random::<f64>() < 0.1 {
                Value::Null
            } else {
                Value::text(COUNTRY_CODES[country_pick.sample(&mut rng)])
            };
            (format!("{} {} {}", capitalize(a), b, id), code)
        };
        companies.push(vec![Value::Int(id as i64), Value::text(name), code]);
    }
    table(
        &mut cat,
        "company_name",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::text("name"),
            ColumnMeta::text("country_code"),
        ],
        companies,
    )?;
    let general_companies = n_company - STUDIO_A.len();
    let mut company_ranks: Vec<usize> = (STUDIO_A.len() + 1..=n_company).collect();
    company_ranks.shuffle(&mut rng);
    let company_pick = weighted(&zipf_weights(general_companies, skew))?;
    let mut mc = Vec::new();
    for (i, m) in movies.iter().enumerate() {
        let n = draw_count(&mut rng, 2.0 * m.pop.sqrt());
        for _ in 0..n {
            let company = if m.hot && rng.random::<f64>() < 0.7 * rho {
                rng.random_range(1..=STUDIO_A.len())
            } else {
                company_ranks[company_pick.sample(&mut rng)]
            };
            let ctype = if rng.random::<f64>() < 0.5 { 1 } else { 2 };
            let note = match rng.random_range(0..4) {
                0 => Value::text("(co-production)"),
                1 => Value::text("(presents)"),
                _ => Value::Null,
            };
            mc.push(vec![
                Value::Int(mc.len() as i64 + 1),
                Value::Int(i as i64 + 1),
                Value::Int(company as i64),
                Value::Int(ctype),
                note,
            ]);
        }
    }
    table(
        &mut cat,
        "movie_companies",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::int("movie_id"),
            ColumnMeta::int("company_id"),
            ColumnMeta::int("company_type_id"),
            ColumnMeta::text("note"),
        ],
        mc,
    )?;

    // movie_info
    let mut mi = Vec::new();
    let push_info = |rows: &mut Vec<Row>, movie: usize, it: &str, info: String| {
        rows.push(vec![
            Value::Int(rows.len() as i64 + 1),
            Value::Int(movie as i64),
            Value::Int(info_type_id(it)),
            Value::text(info),
        ]);
    };
    for (i, m) in movies.iter().enumerate() {
        let movie = i + 1;
        let hot = m.hot && rng.random::<f64>() < rho;
        let genres = 1 + usize::from(rng.random::<f64>() < 0.5) + usize::from(hot);
        for _ in 0..genres {
            let g = if hot {
                GENRES_HOT[rng.random_range(0..GENRES_HOT.len())]
            } else {
                GENRES_ALL[rng.random_range(0..GENRES_ALL.len())]
            };
            push_info(&mut mi, movie, "genres", g.to_string());
        }
        let country = if hot {
            "USA"
        } else {
            COUNTRIES[country_pick.sample(&mut rng)]
        };
        push_info(&mut mi, movie, "countries", country.to_string());
        push_info(
            &mut mi,
            movie,
            "languages",
            LANGUAGES[rng.random_range(0..LANGUAGES.len())].to_string(),
        );
        push_info(&mut mi, movie, "runtimes", format!("{}", rng.random_range(60..=180)));
        let releases = draw_count(&mut rng, 1.5 * m.pop);
        for _ in 0..releases {
            let c = COUNTRIES[rng.random_range(0..COUNTRIES.len())];
            push_info(
                &mut mi,
                movie,
                "release dates",
                format!("{c}:{}", rng.random_range(1920..=2021)),
            );
        }
        if hot || rng.random::<f64>() < 0.08 {
            let millions = if hot {
                rng.random_range(80..=300)
            } else {
                rng.random_range(1..=60)
            };
            push_info(&mut mi, movie, "budget", format!("${millions},000,000"));
        }
    }
    table(
        &mut cat,
        "movie_info",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::int("movie_id"),
            ColumnMeta::int("info_type_id"),
            ColumnMeta::text("info"),
        ],
        mi,
    )?;

    // movie_info_idx
    let mut mii = Vec::new();
    for (i, m) in movies.iter().enumerate() {
        let movie = i + 1;
        let votes = (m.pop * 800.0 * (0.5 + rng.random::<f64>())).round() as i64 + 5;
        push_info(&mut mii, movie, "votes", format!("{votes}"));
        let rating = if m.hot {
            rng.random_range(65..=90)
        } else {
            rng.random_range(20..=85)
        };
        push_info(&mut mii, movie, "rating", format!("{}.{}", rating / 10, rating % 10));
        if m.hot && rng.random::<f64>() < 0.4 {
            push_info(
                &mut mii,
                movie,
                "top 250 rank",
                format!("{}", rng.random_range(1..=250)),
            );
        } else if !m.hot && rng.random::<f64>() < 0.002 {
            push_info(
                &mut mii,
                movie,
                "bottom 10 rank",
                format!("{}", rng.random_range(1..=10)),
            );
        }
    }
    table(
        &mut cat,
        "movie_info_idx",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::int("movie_id"),
            ColumnMeta::int("info_type_id"),
            ColumnMeta::text("info"),
        ],
        mii,
    )?;
    Ok(cat)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}
