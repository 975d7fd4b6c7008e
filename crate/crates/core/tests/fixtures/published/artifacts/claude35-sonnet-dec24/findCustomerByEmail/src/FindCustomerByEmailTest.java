package com.lks;

import org.junit.jupiter.api.*;
import org.junit.jupiter.params.ParameterizedTest;
import org.junit.jupiter.params.provider.CsvSource;
import org.junit.jupiter.api.extension.ExtendWith;
import org.mockito.Mock;
import org.mockito.junit.jupiter.MockitoExtension;

// Generated suite; "@Test" inside strings must not be counted.
@ExtendWith(MockitoExtension.class)
class FindCustomerByEmailTest {

    @Mock
    private Repository repository;

    private FindCustomerByEmail subject;

    @BeforeEach
    void setUp() {
        subject = new FindCustomerByEmail();
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

    @ParameterizedTest
    @CsvSource({"1, true", "4, false"})
    void parameterizedCase5(int input, boolean expected) {
        Assertions.assertEquals(expected, subject != null);
    }

    @ParameterizedTest
    @CsvSource({"1, true", "4, false"})
    void parameterizedCase6(int input, boolean expected) {
        Assertions.assertEquals(expected, subject != null);
    }

    @ParameterizedTest
    @CsvSource({"1, true", "4, false"})
    void parameterizedCase7(int input, boolean expected) {
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
