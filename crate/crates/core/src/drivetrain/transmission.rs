use core::fmt;

/// Teeth on the master pulley fixed to each nut.
pub const MASTER_TEETH: u32 = 24;

/// Slave pulleys of the side-pulley drive, by name and tooth count.
pub const SLAVE_PULLEYS: [(&str, u32); 5] = [
    ("Slave Pulley 1", 60),
    ("Slave Pulley 2", 48),
    ("Slave Pulley 3", 36),
    ("Slave Pulley 4", 24),
    ("Slave Pulley 5", 72),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransmissionError {
    ZeroTeeth,
    UnknownPulley,
}

impl fmt::Display for TransmissionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransmissionError::ZeroTeeth => write!(f, "pulley tooth counts must be positive"),
            TransmissionError::UnknownPulley => {
                write!(f, "unknown slave pulley (expected \"Slave Pulley 1\" .. \"Slave Pulley 5\")")
            }
        }
    }
}

impl core::error::Error for TransmissionError {}

/// Belt stage between a motor and a nut.
///
/// The nut turns `slave_teeth / master_teeth` times per motor revolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransmissionConfig {
    master_teeth: u32,
    slave_teeth: u32,
}

impl TransmissionConfig {
    /// Slave Pulley 1, 1:2.5. The configuration the prototype was validated with.
    pub const PROTOTYPE: TransmissionConfig = TransmissionConfig {
        master_teeth: MASTER_TEETH,
        slave_teeth: 60,
    };

    pub fn new(master_teeth: u32, slave_teeth: u32) -> Result<Self, TransmissionError> {
        if master_teeth == 0 || slave_teeth == 0 {
            return Err(TransmissionError::ZeroTeeth);
        }
        Ok(Self {
            master_teeth,
            slave_teeth,
        })
    }

    /// Look up a slave pulley by its table name, case-insensitively.
    pub fn slave_pulley(name: &str) -> Result<Self, TransmissionError> {
        SLAVE_PULLEYS
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name.trim()))
            .map(|&(_, teeth)| TransmissionConfig {
                master_teeth: MASTER_TEETH,
                slave_teeth: teeth,
            })
            .ok_or(TransmissionError::UnknownPulley)
    }

    /// All five slave-pulley configurations in table order.
    pub fn all_slave_pulleys() -> [TransmissionConfig; 5] {
        SLAVE_PULLEYS.map(|(_, teeth)| TransmissionConfig {
            master_teeth: MASTER_TEETH,
            slave_teeth: teeth,
        })
    }

    pub fn master_teeth(&self) -> u32 {
        self.master_teeth
    }

    pub fn slave_teeth(&self) -> u32 {
        self.slave_teeth
    }

    pub fn ratio(&self) -> f64 {
        f64::from(self.slave_teeth) / f64::from(self.master_teeth)
    }

    /// Name from the pulley table, if this is one of the standard pairs.
    pub fn name(&self) -> Option<&'static str> {
        if self.master_teeth != MASTER_TEETH {
            return None;
        }
        SLAVE_PULLEYS
            .iter()
            .find(|(_, teeth)| *teeth == self.slave_teeth)
            .map(|(name, _)| *name)
    }
}

impl Default for TransmissionConfig {
    fn default() -> Self {
        Self::PROTOTYPE
    }
}

/// Nut speed for a given motor speed, sign preserved.
pub fn transmission_output(motor_speed: f64, cfg: &TransmissionConfig) -> f64 {
    // multiply before dividing so integral inputs stay exact
    motor_speed * f64::from(cfg.slave_teeth) / f64::from(cfg.master_teeth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let p1 = TransmissionConfig::slave_pulley("Slave Pulley 1").unwrap();
        let p5 = TransmissionConfig::slave_pulley("slave pulley 5").unwrap();
        let p4 = TransmissionConfig::slave_pulley("Slave Pulley 4").unwrap();
        assert_eq!(transmission_output(150.0, &p1), 375.0);
        assert_eq!(transmission_output(75.0, &p5), 225.0);
        assert_eq!(transmission_output(-33.3, &p4), -33.3);
        assert_eq!(p1.ratio(), 2.5);
        assert_eq!(p1.name(), Some("Slave Pulley 1"));
    }

    #[test]
    fn rejects_bad_configs() {
        assert_eq!(TransmissionConfig::new(0, 60), Err(TransmissionError::ZeroTeeth));
        assert_eq!(TransmissionConfig::new(24, 0), Err(TransmissionError::ZeroTeeth));
        assert_eq!(
            TransmissionConfig::slave_pulley("Slave Pulley 9"),
            Err(TransmissionError::UnknownPulley)
        );
        assert_eq!(TransmissionConfig::new(20, 60).unwrap().name(), None);
    }

    #[test]
    fn ratio_matches_teeth() {
        for cfg in TransmissionConfig::all_slave_pulleys() {
            let expected = f64::from(cfg.slave_teeth()) / f64::from(cfg.master_teeth());
            assert!((cfg.ratio() - expected).abs() <= 1e-12);
        }
    }
}
