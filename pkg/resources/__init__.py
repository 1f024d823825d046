# 바디 zoo 와 번들 바디 스펙
