# Channel specs, random generation and reports
