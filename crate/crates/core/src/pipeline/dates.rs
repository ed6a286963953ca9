use chrono::{DateTime, Datelike, NaiveDate, TimeZone};

/// English ordinal suffix: 1st, 2nd, 3rd, 4th, 11th, 12th, 13th, 21st, ...
pub fn ordinal_suffix(day: u32) -> &'static str {
    match (day % 10, day % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    }
}

/// `<day><suffix> <Mon>`, e.g. "23rd Nov".
pub fn format_day(date: NaiveDate) -> String {
    format!("{}{} {}", date.day(), ordinal_suffix(date.day()), date.format("%b"))
}

/// Formats a timestamp as [`format_day`] in the timestamp's own zone.
pub fn format_date<Tz: TimeZone>(timestamp: &DateTime<Tz>) -> String
where
    Tz::Offset: std::fmt::Display,
{
    format_day(timestamp.date_naive())
}
