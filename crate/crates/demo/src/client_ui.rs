//! The menu loop of the demo client.
//!
//! In scripted mode every input line is a menu option and the values the
//! options need (the weather to set, the username) are canned, so a session
//! transcript depends only on the script. Interactive mode prompts for them.

use std::fmt;
use std::io::{self, BufRead, Write};

use chrono::{DateTime, SubsecRound, TimeZone, Utc};
use tracing::warn;

use crate::client_reader::ClientReader;
use crate::weather::{Weather, WeatherError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MenuOption {
    SignUp,
    SetWeather,
    GetWeather,
    NotifyTest,
    RequestTest,
    Quit,
}

impl MenuOption {
    pub const ALL: [MenuOption; 6] = [
        MenuOption::SignUp,
        MenuOption::SetWeather,
        MenuOption::GetWeather,
        MenuOption::NotifyTest,
        MenuOption::RequestTest,
        MenuOption::Quit,
    ];

    pub fn number(self) -> u8 {
        match self {
            MenuOption::SignUp => 1,
            MenuOption::SetWeather => 2,
            MenuOption::GetWeather => 3,
            MenuOption::NotifyTest => 4,
            MenuOption::RequestTest => 5,
            MenuOption::Quit => 0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MenuOption::SignUp => "Sign up",
            MenuOption::SetWeather => "Set Weather",
            MenuOption::GetWeather => "Get Weather",
            MenuOption::NotifyTest => "Notify Test",
            MenuOption::RequestTest => "Request Test",
            MenuOption::Quit => "Quit",
        }
    }

    pub fn parse(input: &str) -> Option<Self> {
        let n: u8 = input.trim().parse().ok()?;
        MenuOption::ALL.into_iter().find(|o| o.number() == n)
    }
}

impl fmt::Display for MenuOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}) {}", self.number(), self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Scripted,
    Interactive,
}

pub const SCRIPTED_USERNAME: &str = "polldesk";

/// The weather option 2 sets in scripted mode.
pub fn scripted_weather() -> Weather {
    Weather::new(25.0, "sunny", false, 0.0, Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap())
        .expect("canned weather is valid")
}

pub fn render_menu(out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "===== Menu Head =====")?;
    for option in MenuOption::ALL {
        writeln!(out, "{option}")?;
    }
    writeln!(out, "===== Menu Tail =====")?;
    writeln!(out)?;
    writeln!(out, "Input an option:")
}

pub fn render_weather(out: &mut impl Write, weather: &Weather) -> io::Result<()> {
    writeln!(out, "Temperature: {}", weather.temperature())?;
    writeln!(out, "Forecast: {}", weather.forecast())?;
    writeln!(out, "Rain: {}", weather.is_rain())?;
    writeln!(out, "How much rain: {}", weather.how_much_rain())?;
    writeln!(out, "Time: {}", weather.time_text())
}

pub struct ClientUi<'a, R, W> {
    client: &'a ClientReader,
    input: R,
    out: W,
    mode: Mode,
}

impl<'a, R: BufRead, W: Write> ClientUi<'a, R, W> {
    pub fn new(client: &'a ClientReader, input: R, out: W, mode: Mode) -> Self {
        ClientUi {
            client,
            input,
            out,
            mode,
        }
    }

    /// Runs until option 0 or end of input, then disposes the client.
    pub fn run(mut self) -> io::Result<()> {
        loop {
            render_menu(&mut self.out)?;
            self.out.flush()?;
            let Some(line) = self.read_line()? else {
                break;
            };
            let Some(option) = MenuOption::parse(&line) else {
                writeln!(self.out, "Invalid option: {}", line.trim())?;
                writeln!(self.out)?;
                continue;
            };
            writeln!(self.out, "Your choice: {}", option.number())?;
            if option == MenuOption::Quit {
                break;
            }
            self.execute(option)?;
            writeln!(self.out)?;
        }
        self.client.dispose();
        self.out.flush()
    }

    fn read_line(&mut self) -> io::Result<Option<String>> {
        let mut line = String::new();
        if self.input.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        Ok(Some(line.trim_end_matches(['\r', '\n']).to_owned()))
    }

    fn prompt(&mut self, label: &str) -> io::Result<String> {
        writeln!(self.out, "{label}")?;
        self.out.flush()?;
        Ok(self.read_line()?.unwrap_or_default().trim().to_owned())
    }

    fn execute(&mut self, option: MenuOption) -> io::Result<()> {
        match option {
            MenuOption::SignUp => {
                let username = match self.mode {
                    Mode::Scripted => SCRIPTED_USERNAME.to_owned(),
                    Mode::Interactive => self.prompt("Username:")?,
                };
                match self.client.sign_up(&username) {
                    Ok(()) => writeln!(self.out, "Signed up as {username}"),
                    Err(e) => self.failed("Sign up", &e),
                }
            }
            MenuOption::SetWeather => {
                let weather = match self.mode {
                    Mode::Scripted => Ok(scripted_weather()),
                    Mode::Interactive => self.prompt_weather()?,
                };
                match weather {
                    Ok(weather) => match self.client.set_weather(weather) {
                        Ok(()) => writeln!(self.out, "Weather set"),
                        Err(e) => self.failed("Set weather", &e),
                    },
                    Err(e) => writeln!(self.out, "Invalid weather: {e}"),
                }
            }
            MenuOption::GetWeather => match self.client.get_weather() {
                Some(response) => render_weather(&mut self.out, response.weather()),
                None => writeln!(self.out, "No weather available"),
            },
            MenuOption::NotifyTest => match self.client.notify_test("notification") {
                Ok(()) => writeln!(self.out, "Notification sent"),
                Err(e) => self.failed("Notify test", &e),
            },
            MenuOption::RequestTest => match self.client.get_response("request") {
                Some(response) => writeln!(self.out, "{}", response.response),
                None => writeln!(self.out, "No response"),
            },
            MenuOption::Quit => Ok(()),
        }
    }

    fn failed(&mut self, what: &str, e: &dyn std::error::Error) -> io::Result<()> {
        warn!(error = %e, "{what} failed");
        writeln!(self.out, "{what} failed: {e}")
    }

    fn prompt_weather(&mut self) -> io::Result<Result<Weather, InputError>> {
        let temperature = self.prompt("Temperature:")?;
        let forecast = self.prompt("Forecast:")?;
        let rain = self.prompt("Rain (true/false):")?;
        let how_much_rain = self.prompt("How much rain:")?;
        let parsed = (|| {
            let temperature = temperature
                .parse()
                .map_err(|_| InputError::NotANumber(temperature.clone()))?;
            let rain = rain.parse().map_err(|_| InputError::NotABool(rain.clone()))?;
            let how_much_rain = if how_much_rain.is_empty() {
                0.0
            } else {
                how_much_rain
                    .parse()
                    .map_err(|_| InputError::NotANumber(how_much_rain.clone()))?
            };
            let now: DateTime<Utc> = Utc::now().trunc_subsecs(0);
            Ok(Weather::new(temperature, forecast.clone(), rain, how_much_rain, now)?)
        })();
        Ok(parsed)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("not a number: {0:?}")]
    NotANumber(String),
    #[error("expected true or false, got {0:?}")]
    NotABool(String),
    #[error(transparent)]
    Weather(#[from] WeatherError),
}
