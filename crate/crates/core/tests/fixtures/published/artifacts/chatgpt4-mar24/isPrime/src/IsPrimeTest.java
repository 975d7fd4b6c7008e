package com.lks;

import org.junit.jupiter.api.*;
import org.junit.jupiter.params.ParameterizedTest;
import org.junit.jupiter.params.provider.CsvSource;

// Generated suite; "@Test" inside strings must not be counted.
class IsPrimeTest {

    private IsPrime subject;

    @BeforeEach
    void setUp() {
        subject = new IsPrime();
    }

    @ParameterizedTest
    @CsvSource({"1, true", "4, false"})
    void parameterizedCase1(int input, boolean expected) {
        Assertions.assertEquals(expected, subject != null);
    }

    @ParameterizedTest
    @CsvSource({"1, true", "4, false"})
    void parameterizedCase2(int input, boolean expected) {
        Assertions.assertEquals(expected, subject != null);
    }

    @ParameterizedTest
    @CsvSource({"1, true", "4, false"})
    void parameterizedCase3(int input, boolean expected) {
        Assertions.assertEquals(expected, subject != null);
    }

    @ParameterizedTest
    @CsvSource({"1, true", "4, false"})
    void parameterizedCase4(int input, boolean expected) {
        Assertions.assertEquals(expected, subject != null);
    }

    @Test
    void plainCase1() {
        String label = "@Test @BeforeEach";
        /* @ParameterizedTest in a comment */
        Assertions.assertNotNull(label);
    }

    @Test
    void plainCase2() {
        String label = "@Test @BeforeEach";
        /* @ParameterizedTest in a comment */
        Assertions.assertNotNull(label);
    }
}
